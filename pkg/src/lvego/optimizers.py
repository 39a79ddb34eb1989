"""Inner optimizers: restarted derivative-free box search and a mixed (mu+lambda)-ES."""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .doe import Design, lhs_continuous
from .history import RunHistory
from .problems import MixedPoint, MixedProblem


class OptimizerError(RuntimeError):
    pass


class _Abort(Exception):
    pass


@dataclass(frozen=True)
class LocalSearchConfig:
    restarts: int = 10
    max_evals_per_restart: int = 300
    initial_step: float = 0.25
    tol: float = 1e-6
    method: str = "compass"
    screen: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tol <= 0 or self.initial_step <= 0:
            raise ValueError("tol and initial_step must be positive")
        if self.method not in ("compass", "cobyla", "lbfgs"):
            raise ValueError(f"unknown local search method {self.method!r}")


@dataclass
class LocalSearchResult:
    x: np.ndarray
    fun: float
    start_points: np.ndarray
    start_values: np.ndarray
    n_evals: int
    aborted: int = 0

    def __iter__(self):
        yield self.x
        yield self.fun


class _Tracked:
    """Objective in unit-cube coordinates that remembers its best evaluation."""

    def __init__(self, f, lower, width, budget):
        self.f, self.lower, self.width = f, lower, width
        self.budget = budget
        self.n = 0
        self.first = np.nan
        self.best_z, self.best_f = None, np.inf

    def __call__(self, z):
        z = np.clip(z, 0.0, 1.0)
        if self.n >= self.budget:
            raise _Abort("budget")
        self.n += 1
        v = float(self.f(self.lower + self.width * z))
        if not np.isfinite(v):
            raise _Abort("non-finite")
        if self.n == 1:
            self.first = v
        if v < self.best_f:
            self.best_z, self.best_f = z.copy(), v
        return v


def _compass(obj: _Tracked, z0: np.ndarray, cfg: LocalSearchConfig):
    z = z0.copy()
    fz = obj(z)
    step = cfg.initial_step
    d = z.size
    while step >= cfg.tol and obj.n < obj.budget:
        improved = False
        for i in range(d):
            for sgn in (1.0, -1.0):
                zi = min(max(z[i] + sgn * step, 0.0), 1.0)
                if zi == z[i]:
                    continue
                cand = z.copy()
                cand[i] = zi
                fc = obj(cand)
                if fc < fz:
                    z, fz, improved = cand, fc, True
                    break
            if obj.n >= obj.budget:
                break
        if not improved:
            step *= 0.5


def _cobyla(obj: _Tracked, z0: np.ndarray, cfg: LocalSearchConfig):
    d = z0.size
    cons = [{"type": "ineq", "fun": lambda z: z}, {"type": "ineq", "fun": lambda z: 1.0 - z}]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        minimize(obj, z0, method="COBYLA", constraints=cons,
                 options={"rhobeg": cfg.initial_step, "tol": cfg.tol,
                          "maxiter": max(cfg.max_evals_per_restart, d + 2)})


def _safe(f, x) -> float:
    v = float(f(x))
    return v if np.isfinite(v) else np.inf


def _lbfgs(obj: _Tracked, z0: np.ndarray, cfg: LocalSearchConfig):
    # Forward-difference gradients; every evaluation counts toward the budget.
    d = z0.size
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        minimize(obj, z0, method="L-BFGS-B", bounds=[(0.0, 1.0)] * d,
                 options={"maxfun": cfg.max_evals_per_restart, "ftol": cfg.tol * 1e-3,
                          "gtol": cfg.tol, "eps": 1e-7})


_METHODS = {"compass": _compass, "cobyla": _cobyla, "lbfgs": _lbfgs}


def local_minimize(f: Callable[[np.ndarray], float], lower, upper,
                   cfg: LocalSearchConfig = LocalSearchConfig(), seed=None,
                   starts: Optional[Sequence] = None,
                   start_lower=None, start_upper=None) -> LocalSearchResult:
    """Restarted, bound-respecting, derivative-free minimization of ``f``.

    The first restarts begin at the caller's ``starts`` (warm starts); the rest
    begin at Latin hypercube points of ``[start_lower, start_upper]``, which
    defaults to the search box. A restart that meets a non-finite value is
    abandoned. The best evaluated point over all restarts is returned, ties
    going to the earliest restart.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    width = np.where(upper > lower, upper - lower, 1.0)
    rng = np.random.default_rng(seed)

    z_starts, n_screen = [], 0
    for s in list(starts or [])[: cfg.restarts]:
        z_starts.append(np.clip((np.asarray(s, dtype=float) - lower) / width, 0.0, 1.0))
    n_lhs = cfg.restarts - len(z_starts)
    if n_lhs > 0:
        slo = lower if start_lower is None else np.asarray(start_lower, dtype=float)
        shi = upper if start_upper is None else np.asarray(start_upper, dtype=float)
        n_cand = max(n_lhs, cfg.screen)
        pts = slo + (shi - slo) * lhs_continuous(n_cand, lower.size, rng)
        if n_cand > n_lhs:
            vals = np.array([_safe(f, p) for p in pts])
            n_screen = n_cand
            pts = pts[np.argsort(vals, kind="stable")[:n_lhs]]
        z_starts.extend(np.clip((pts - lower) / width, 0.0, 1.0))

    run = _METHODS[cfg.method]
    best_z, best_f = None, np.inf
    start_vals, n_evals, aborted = [], n_screen, 0
    for z0 in z_starts:
        obj = _Tracked(f, lower, width, cfg.max_evals_per_restart)
        try:
            run(obj, z0, cfg)
        except _Abort as exc:
            if str(exc) != "budget":
                aborted += 1
        n_evals += obj.n
        start_vals.append(obj.first)
        if obj.best_z is not None and obj.best_f < best_f:
            best_z, best_f = obj.best_z, obj.best_f
    if best_z is None or aborted == len(z_starts):
        raise OptimizerError("every restart of the local search failed")
    x = np.clip(lower + width * best_z, lower, upper)
    return LocalSearchResult(x, float(best_f), lower + width * np.array(z_starts),
                             np.array(start_vals), n_evals, aborted)


# ---------------------------------------------------------------------------
# Mixed-integer evolution strategy

@dataclass
class ESResult:
    X: np.ndarray
    U: np.ndarray
    f: np.ndarray
    sigmas: list = field(default_factory=list)

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.f))


def es_minimize(func: Callable[[np.ndarray, np.ndarray], np.ndarray], n_c: int,
                levels: Sequence[int], budget: int, rng: np.random.Generator,
                init_X: Optional[np.ndarray] = None, init_U: Optional[np.ndarray] = None,
                mu: int = 5, lam: int = 10, sigma0: float = 0.2) -> ESResult:
    """(mu+lambda)-ES over ``[0,1]^n_c x prod {1..m_j}`` with exactly ``budget`` calls.

    ``func`` maps a batch ``(X, U)`` to an array of values. Initial points are
    evaluated first and count toward the budget; without them ``mu`` random
    points are drawn. Continuous genes take Gaussian steps whose size follows
    the 1/5 success rule; each categorical gene is redrawn uniformly with
    probability ``1/n_d``.
    """
    levels = np.asarray(levels, dtype=int)
    n_d = levels.size
    if init_X is None:
        k = min(mu, budget)
        init_X = lhs_continuous(k, n_c, rng) if n_c else np.empty((k, 0))
        init_U = np.column_stack([rng.integers(1, m + 1, size=k) for m in levels])
    init_X = np.asarray(init_X, dtype=float)[:budget]
    init_U = np.asarray(init_U, dtype=int)[:budget]
    if budget < init_X.shape[0] or budget < 1:
        raise ValueError("budget must cover the initial population")

    Xs, Us, fs = [init_X], [init_U], [np.asarray(func(init_X, init_U), dtype=float)]
    used = init_X.shape[0]
    order = np.argsort(fs[0], kind="stable")[:mu]
    PX, PU, Pf = init_X[order], init_U[order], fs[0][order]
    sigma = sigma0
    sigmas = [sigma]
    p_mut = 1.0 / n_d
    while used < budget:
        n_off = min(lam, budget - used)
        parents = rng.integers(0, PX.shape[0], size=n_off)
        OX = PX[parents].copy()
        if n_c:
            OX = OX + sigma * rng.standard_normal(OX.shape)
            OX = np.abs(OX)
            OX = np.where(OX > 1.0, 2.0 - OX, OX)
            OX = np.clip(OX, 0.0, 1.0)
        OU = PU[parents].copy()
        redraw = rng.random(OU.shape) < p_mut
        fresh = np.column_stack([rng.integers(1, m + 1, size=n_off) for m in levels])
        OU = np.where(redraw, fresh, OU)
        Of = np.asarray(func(OX, OU), dtype=float)
        used += n_off
        Xs.append(OX)
        Us.append(OU)
        fs.append(Of)
        success = np.mean(Of < Pf[parents])
        sigma = sigma / 0.85 if success > 0.2 else sigma * 0.85
        sigma = float(np.clip(sigma, 1e-6, 1.0))
        sigmas.append(sigma)
        AX = np.vstack([PX, OX])
        AU = np.vstack([PU, OU])
        Af = np.concatenate([Pf, Of])
        keep = np.argsort(Af, kind="stable")[:mu]
        PX, PU, Pf = AX[keep], AU[keep], Af[keep]
    return ESResult(np.vstack(Xs), np.vstack(Us), np.concatenate(fs), sigmas)


def mixed_es(problem: MixedProblem, budget: int, seed: int,
             design: Optional[Design] = None, algorithm: str = "ms-es") -> RunHistory:
    """Run the (5+10)-ES directly on ``problem`` for exactly ``budget`` evaluations.

    When ``design`` is given its points are evaluated first and form the
    initial population pool.
    """
    hist = RunHistory(problem.name, algorithm, seed, len(design) if design else 0, budget)
    rng = np.random.default_rng([seed, 2])

    def func(X, U):
        out = []
        for x, u in zip(X, U):
            p = MixedPoint.of(x, u)
            y = problem.evaluate(p)
            phase = "doe" if len(hist) < hist.n_doe else "search"
            hist.append(p, y, phase, time.time())
            out.append(y)
        return np.array(out)

    es_minimize(func, problem.n_c, problem.levels, budget, rng,
                init_X=None if design is None else design.X,
                init_U=None if design is None else design.U)
    hist.status = "complete"
    return hist
