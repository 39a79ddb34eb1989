"""
Relaxed acquisition under a discreteness constraint
===================================================

Instead of enumerating levels, the acquisition search can move freely in the
latent space and be pulled back to level images by a constraint g <= 0,
where g is the scaled distance to the nearest image minus a tolerance.
Two ways to choose the augmented-Lagrangian multipliers are shown: the
global scheme samples the dual function on a (lambda, rho) grid, the local
scheme updates lambda and rho from one solve to the next.
"""
import numpy as np

from lvego.acquisition import EPSILON_INEQUALITY, AcquisitionContext, preimage
from lvego.auglag import DualState, global_dual_solve, local_dual_solve, local_dual_step
from lvego.doe import maximin_lhs_mixed
from lvego.gp import fit
from lvego.problems import BRANIN

design = maximin_lhs_mixed(BRANIN, 16, seed=3)
y = np.array([BRANIN(x, u) for x, u in zip(design.X, design.U)])
model = fit(design.X, design.U, y, BRANIN.levels, seed=0)
ctx = AcquisitionContext.build(model, EPSILON_INEQUALITY)

x, lat, state, diag = global_dual_solve(ctx, seed=0)
u, ei = preimage(ctx, x)
print(f"global scheme: lambda={state.lam:.3g} rho={state.rho:.3g} g={diag['g']:.3g}")
print(f"  x={x[0]:.4f} -> level {u[0]}, EI {ei.max():.4g}")

# A few local steps starting from lambda=0, rho=1.
state = DualState()
for it in range(4):
    x, lat, diag = local_dual_solve(ctx, state, seed=it)
    u, ei = preimage(ctx, x)
    print(f"local step {it}: lambda={state.lam:.3g} rho={state.rho:.3g} g={diag['g']:+.3g}"
          f" x={x[0]:.4f} level {u[0]}")
    state = local_dual_step(state, diag["g"])
