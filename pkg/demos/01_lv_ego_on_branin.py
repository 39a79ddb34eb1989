"""
Latent-variable EGO on the discretized Branin function
======================================================

Branin's second input is restricted to four values, so the problem has one
continuous variable and one categorical variable with four levels. The
latent-variable GP places each level on the unit circle; the angle between
two levels sets their correlation.
"""
import numpy as np

from lvego import get_problem, run_lv_ego
from lvego.gp import latent_correlation, LatentMap

problem = get_problem("branin")
print(problem.name, "continuous:", problem.n_c, "levels:", problem.levels)

# A 16-point maximin design, then 20 EGO iterations.
hist = run_lv_ego(problem, budget=36, seed=0)
point, y = hist.best_point()
print(f"best value {y:.4f} at x={point.x[0]:.4f}, level {point.u[0]}")

# Best-so-far after the design and after every fifth iteration.
curve = hist.best_so_far
for i in range(hist.n_doe - 1, len(curve), 5):
    print(f"  evaluation {i + 1:3d}: {curve[i]:.4f}")

# Level correlations estimated at the last iteration.
phi = LatentMap.from_list(hist.records[-1].latent).phi[0]
np.set_printoptions(precision=2, suppress=True)
print("level correlation matrix:")
print(latent_correlation(phi))
