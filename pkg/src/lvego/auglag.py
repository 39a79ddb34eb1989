"""Augmented Lagrangians for the discreteness constraint and the two dual schemes.

The relaxed acquisition problem is ``min f(x, l)`` subject to ``g(l) <= 0``
(inequality, ``epsilon > 0``) or ``h(l) = 0`` (equality, ``epsilon = 0``).
Multipliers are chosen either globally, by maximizing a sampled dual
function over a (lambda, rho) grid, or locally, by a first-order update from
one iteration to the next.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .acquisition import AcquisitionContext, RelaxedSpace, f_t, g_t
from .doe import lhs_continuous
from .optimizers import LocalSearchConfig, local_minimize


@dataclass(frozen=True)
class DualState:
    lam: float = 0.0
    rho: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"multiplier must be non-negative, got {self.lam}")
        if not self.rho > 0:
            raise ValueError(f"penalty must be positive, got {self.rho}")

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "rho": self.rho}


def al_rockafellar(f, g, state: DualState):
    """Inequality augmented Lagrangian in its two-branch form."""
    lam, rho = state.lam, state.rho
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    out = np.where(g <= -lam / rho, f - lam * lam / (2.0 * rho),
                   f + lam * g + 0.5 * rho * g * g)
    return out if out.ndim else float(out)


def al_rockafellar_maxform(f, g, state: DualState):
    """Same value as ``al_rockafellar`` written with a single max."""
    lam, rho = state.lam, state.rho
    p = np.maximum(0.0, lam + rho * np.asarray(g, dtype=float))
    out = np.asarray(f, dtype=float) + (p * p - lam * lam) / (2.0 * rho)
    return out if out.ndim else float(out)


def al_hestenes(f, h, state: DualState):
    """Equality augmented Lagrangian ``f + lam h + (rho / 2) h^2``."""
    h = np.asarray(h, dtype=float)
    out = np.asarray(f, dtype=float) + state.lam * h + 0.5 * state.rho * h * h
    return out if out.ndim else float(out)


def _al_hestenes_raw(f, h, lam, rho):
    return f + lam * h + 0.5 * rho * h * h


def _al_rockafellar_raw(f, g, lam, rho):
    p = np.maximum(0.0, lam + rho * g)
    return f + (p * p - lam * lam) / (2.0 * rho)


def slack_lagrangian(f, g, s, state: DualState):
    """Equality Lagrangian of ``g + s = 0`` where ``s >= 0`` plays the squared slack."""
    return al_hestenes(f, np.asarray(g, dtype=float) + np.asarray(s, dtype=float), state)


def optimal_slack(g, state: DualState):
    """Squared slack minimizing ``slack_lagrangian``: ``max(0, -lam/rho - g)``."""
    out = np.maximum(0.0, -state.lam / state.rho - np.asarray(g, dtype=float))
    return out if out.ndim else float(out)


def local_dual_step(prev: DualState, g_prev: float) -> DualState:
    """First-order multiplier update; the penalty doubles while infeasible."""
    lam, rho = prev.lam, prev.rho
    s2 = max(0.0, -lam / rho - g_prev)
    # Algebraically max(0, lam + rho g); the clamp removes rounding below zero.
    new_lam = max(0.0, lam + rho * (g_prev + s2))
    new_rho = rho if g_prev <= 0 else 2.0 * rho
    return DualState(new_lam, new_rho)


# ---------------------------------------------------------------------------
# Global dual scheme

@dataclass(frozen=True)
class GlobalDualConfig:
    n_doe: int = 100
    n_lambda: int = 100
    n_rho: int = 20
    lambda_range: tuple[float, float] = (1e-3, 10.0)
    rho_range: tuple[float, float] = (1e-2, 1e4)
    fine_tune: LocalSearchConfig = LocalSearchConfig(restarts=10)


def rho_grid(cfg: GlobalDualConfig = GlobalDualConfig()) -> np.ndarray:
    return np.logspace(np.log10(cfg.rho_range[0]), np.log10(cfg.rho_range[1]), cfg.n_rho)


def lambda_grid(delta_f: float, cfg: GlobalDualConfig = GlobalDualConfig()) -> np.ndarray:
    """Zero followed by log-spaced values scaled by the objective range.

    A flat objective (zero range) would collapse the grid, so the range is
    floored at 1e-8.
    """
    d = max(float(delta_f), 1e-8)
    lo, hi = cfg.lambda_range
    return np.concatenate([[0.0], np.logspace(np.log10(lo * d), np.log10(hi * d),
                                              cfg.n_lambda - 1)])


def sampled_dual(f_vals, g_vals, lambdas, rhos, lagrangian: str):
    """Minimum of the augmented Lagrangian over sampled points on a (lambda, rho) grid.

    Returns the dual values and the index of the minimizing sample, both of
    shape ``(len(lambdas), len(rhos))``. Ties go to the first sample.
    """
    raw = _al_rockafellar_raw if lagrangian == "rockafellar" else _al_hestenes_raw
    f = np.asarray(f_vals, dtype=float)[None, None, :]
    g = np.asarray(g_vals, dtype=float)[None, None, :]
    L = raw(f, g, np.asarray(lambdas)[:, None, None], np.asarray(rhos)[None, :, None])
    idx = np.argmin(L, axis=2)
    return np.take_along_axis(L, idx[..., None], axis=2)[..., 0], idx


@dataclass
class DualSolution:
    z: np.ndarray
    state: DualState
    f: float
    g: float
    diagnostics: dict = field(default_factory=dict)


def solve_global_dual(f_batch: Callable[[np.ndarray], np.ndarray],
                      g_batch: Callable[[np.ndarray], np.ndarray],
                      lower, upper, feasible_points: np.ndarray, lagrangian: str,
                      rng: np.random.Generator, cfg: GlobalDualConfig = GlobalDualConfig(),
                      warm_starts: Sequence = ()) -> DualSolution:
    """Pick (lambda, rho) from a sampled dual function, then minimize the Lagrangian.

    ``feasible_points`` fills one part of the sample; Latin hypercube points
    of the box fill the rest up to ``cfg.n_doe``. For each rho, lambda
    maximizes the sampled dual (first grid index on ties); the smallest rho
    whose minimizing sample is feasible is kept. Without any such rho the
    largest is used and ``diagnostics["fallback"]`` is set.
    """
    if lagrangian not in ("rockafellar", "hestenes"):
        raise ValueError(f"unknown Lagrangian {lagrangian!r}")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    feas = np.atleast_2d(np.asarray(feasible_points, dtype=float))
    n_free = cfg.n_doe - feas.shape[0]
    parts = [feas]
    if n_free > 0:
        parts.append(lower + (upper - lower) * lhs_continuous(n_free, lower.size, rng))
    Z = np.vstack(parts)
    fv = np.asarray(f_batch(Z), dtype=float)
    gv = np.asarray(g_batch(Z), dtype=float)

    lambdas = lambda_grid(np.ptp(fv), cfg)
    rhos = rho_grid(cfg)
    D, idx = sampled_dual(fv, gv, lambdas, rhos, lagrangian)
    best_lam = np.argmax(D, axis=0)
    arg_pts = idx[best_lam, np.arange(rhos.size)]
    feasible_rho = np.flatnonzero(gv[arg_pts] <= 0)
    fallback = feasible_rho.size == 0
    b = int(rhos.size - 1 if fallback else feasible_rho[0])
    if fallback:
        warnings.warn("no penalty on the grid gives a feasible dual point; using the largest",
                      RuntimeWarning, stacklevel=2)
    state = DualState(float(lambdas[best_lam[b]]), float(rhos[b]))
    z_dual = Z[arg_pts[b]]

    raw = _al_rockafellar_raw if lagrangian == "rockafellar" else _al_hestenes_raw

    def objective(z):
        z = z[None, :]
        return float(raw(f_batch(z)[0], g_batch(z)[0], state.lam, state.rho))

    starts = [z_dual] + [np.asarray(w, dtype=float) for w in warm_starts]
    res = local_minimize(objective, lower, upper, cfg.fine_tune, rng, starts=starts)
    z = res.x
    f_z = float(f_batch(z[None, :])[0])
    g_z = float(g_batch(z[None, :])[0])
    diag = {"fallback": bool(fallback), "rho_index": b,
            "lambda_index": int(best_lam[b]), "dual_value": float(D[best_lam[b], b]),
            "dual_point_feasible": bool(gv[arg_pts[b]] <= 0),
            "feasible_after_fine_tune": bool(g_z <= 0), "n_evals": res.n_evals}
    return DualSolution(z, state, f_z, g_z, diag)


def solve_at_state(f_batch, g_batch, lower, upper, state: DualState, lagrangian: str,
                   rng: np.random.Generator, cfg: LocalSearchConfig = LocalSearchConfig(),
                   warm_starts: Sequence = ()) -> DualSolution:
    """Minimize the augmented Lagrangian at fixed multipliers (local scheme)."""
    raw = _al_rockafellar_raw if lagrangian == "rockafellar" else _al_hestenes_raw

    def objective(z):
        z = z[None, :]
        return float(raw(f_batch(z)[0], g_batch(z)[0], state.lam, state.rho))

    res = local_minimize(objective, lower, upper, cfg, rng, starts=list(warm_starts))
    z = res.x
    f_z = float(f_batch(z[None, :])[0])
    g_z = float(g_batch(z[None, :])[0])
    return DualSolution(z, state, f_z, g_z,
                        {"feasible": bool(g_z <= 0), "n_evals": res.n_evals})


# ---------------------------------------------------------------------------
# Acquisition-specific wrappers

def _acquisition_parts(ctx: AcquisitionContext, space: RelaxedSpace):
    n_c = ctx.n_c

    def f_batch(Z):
        return np.atleast_1d(f_t(ctx, Z[:, :n_c], space.to_latent(Z[:, n_c:])))

    def g_batch(Z):
        return np.atleast_1d(g_t(ctx, space.to_latent(Z[:, n_c:])))

    lower, upper = ctx.bounds(space)
    return f_batch, g_batch, lower, upper


def lagrangian_for(epsilon: float) -> str:
    return "hestenes" if epsilon == 0 else "rockafellar"


def global_dual_solve(ctx: AcquisitionContext, seed=None,
                      cfg: GlobalDualConfig = GlobalDualConfig(),
                      warm_starts: Sequence = ()) -> tuple[np.ndarray, np.ndarray, DualState, dict]:
    """Global dual scheme on the relaxed acquisition problem.

    Half of the sample is made feasible by drawing random level vectors and
    placing their latent coordinates exactly on the level images. Search
    vectors and warm starts are ``[x, t]`` with ``t`` in the coordinates of
    ``ctx.space``; the returned latent point is in latent coordinates.
    """
    rng = np.random.default_rng(seed)
    space = ctx.space
    f_batch, g_batch, lower, upper = _acquisition_parts(ctx, space)
    n_feas = cfg.n_doe // 2
    levels = ctx.model.levels
    U = np.column_stack([rng.integers(1, m + 1, size=n_feas) for m in levels])
    Xf = lhs_continuous(n_feas, ctx.n_c, rng) if ctx.n_c else np.empty((n_feas, 0))
    feas = np.hstack([Xf, space.from_levels(U)])
    sol = solve_global_dual(f_batch, g_batch, lower, upper, feas,
                            lagrangian_for(ctx.epsilon), rng, cfg, warm_starts)
    sol.diagnostics["g"] = sol.g
    lat = space.to_latent(sol.z[ctx.n_c:])[0]
    return sol.z[:ctx.n_c], lat, sol.state, sol.diagnostics


def local_dual_solve(ctx: AcquisitionContext, state: DualState, seed=None,
                     cfg: LocalSearchConfig = LocalSearchConfig(),
                     warm_starts: Sequence = ()) -> tuple[np.ndarray, np.ndarray, dict]:
    rng = np.random.default_rng(seed)
    space = ctx.space
    f_batch, g_batch, lower, upper = _acquisition_parts(ctx, space)
    sol = solve_at_state(f_batch, g_batch, lower, upper, state, lagrangian_for(ctx.epsilon),
                         rng, cfg, warm_starts)
    sol.diagnostics["g"] = sol.g
    return sol.z[:ctx.n_c], space.to_latent(sol.z[ctx.n_c:])[0], sol.diagnostics
