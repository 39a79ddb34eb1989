"""Bayesian optimization loops on mixed spaces.

* ``ms-mkes``: compound-symmetry GP, EI maximized by a mixed ES.
* ``ms-es``: the mixed ES run directly on the objective (no surrogate).
* ``lv-ego``: latent-variable GP, EI maximized over the relaxed continuous
  space, then the best level vector is recovered by enumeration.
* ``nr-lv-ego``: as ``lv-ego`` but hyperparameters and latent map are
  estimated once on the initial design.
* ``alv-ego-{g,l}{e,i}``: relaxed search under a discreteness constraint,
  solved with an augmented Lagrangian whose multipliers come from the
  global (g) or local (l) dual scheme, with an equality (e) or
  inequality (i) constraint.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import auglag
from .acquisition import (EPSILON_INEQUALITY, AcquisitionContext, RelaxedSpace, ei_from_moments,
                          f_t, preimage)
from .auglag import DualState, GlobalDualConfig
from .doe import Design, maximin_lhs_mixed
from .gp import FitError, GpModel, GpParams, IllConditionedModel, fit
from .history import RunHistory
from .optimizers import LocalSearchConfig, es_minimize, local_minimize, mixed_es
from .problems import MixedPoint, MixedProblem, get_problem

BUDGET_EXTRA = 50
ACQ_CONFIG = LocalSearchConfig(restarts=10)
ES_ACQ_BUDGET = 3000
DUPLICATE_TOL = 1e-9
DUPLICATE_SHIFT = 0.05

ALGORITHMS = ("ms-mkes", "ms-es", "lv-ego", "nr-lv-ego",
              "alv-ego-ge", "alv-ego-gi", "alv-ego-le", "alv-ego-li")


class RunAborted(RuntimeError):
    pass


def doe_size(problem: MixedProblem) -> int:
    """Initial design size ``4 n_c n_d max(m)`` unless the problem pins it."""
    if problem.n_doe is not None:
        return problem.n_doe
    return 4 * problem.n_c * problem.n_d * max(problem.levels)


def default_budget(problem: MixedProblem) -> int:
    return doe_size(problem) + BUDGET_EXTRA


@dataclass
class _Loop:
    """Shared state of one surrogate-based run."""

    problem: MixedProblem
    hist: RunHistory
    rng: np.random.Generator

    @property
    def X(self):
        return self.hist.X

    @property
    def U(self):
        return self.hist.U

    @property
    def y(self):
        return self.hist.y

    def next_seed(self) -> int:
        return int(self.rng.integers(2 ** 31 - 1))

    def evaluate(self, point: MixedPoint, phase: str, **extra):
        if not isinstance(point, MixedPoint):
            raise TypeError("the objective is only evaluated at mixed points")
        y = self.problem.evaluate(point)
        self.hist.append(point, y, phase, time.time(), **extra)
        return y

    def dedup(self, x, u) -> tuple[MixedPoint, bool]:
        """Shift ``x`` by up to 0.05 per coordinate while it repeats an evaluated point."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=int)
        moved = False
        for _ in range(1000):
            d = np.sqrt(np.sum((self.X - x) ** 2, axis=1)) + np.sum(self.U != u, axis=1)
            if d.min() > DUPLICATE_TOL:
                break
            moved = True
            if x.size:
                x = np.clip(x + self.rng.uniform(-DUPLICATE_SHIFT, DUPLICATE_SHIFT, x.size),
                            0.0, 1.0)
            else:
                u = np.array([self.rng.integers(1, m + 1) for m in self.problem.levels])
        return MixedPoint.of(x, u), moved

    def fit(self, mode: str, warm: Optional[GpParams]) -> GpModel:
        """Fit with one retry under a fresh seed; abort the run on a second failure."""
        last = None
        for _ in range(2):
            try:
                return fit(self.X, self.U, self.y, self.problem.levels, mode=mode,
                           seed=self.next_seed(), warm_start=warm)
            except (FitError, IllConditionedModel) as exc:
                last = exc
                warm = None
        raise RunAborted(f"GP fit failed twice: {last}")


def _start(problem: MixedProblem, algorithm: str, seed: int, budget: Optional[int]):
    n_doe = doe_size(problem)
    budget = default_budget(problem) if budget is None else int(budget)
    if budget <= n_doe:
        raise ValueError(f"budget {budget} must exceed the design size {n_doe}")
    design = maximin_lhs_mixed(problem, n_doe, seed)
    hist = RunHistory(problem.name, algorithm, seed, n_doe, budget)
    loop = _Loop(problem, hist, np.random.default_rng([seed, 1]))
    for p in design.points:
        loop.evaluate(p, "doe")
    return loop, design


def _finish(loop: _Loop, body: Callable[[int], None]) -> RunHistory:
    try:
        while len(loop.hist) < loop.hist.budget:
            body(len(loop.hist) - loop.hist.n_doe)
        loop.hist.status = "complete"
    except RunAborted as exc:
        loop.hist.status = "aborted"
        loop.hist.message = str(exc)
    return loop.hist


def _latent_fields(model: GpModel, refit: bool) -> dict:
    lat = model.latent
    return {"refit": refit, "latent_digest": lat.digest(), "latent": lat.to_list()}


# ---------------------------------------------------------------------------
# Baselines

def run_ms_es(problem: MixedProblem, budget: Optional[int] = None, seed: int = 0) -> RunHistory:
    """Mixed ES on the objective, starting from the same initial design as the BO loops."""
    n_doe = doe_size(problem)
    budget = default_budget(problem) if budget is None else int(budget)
    if budget <= n_doe:
        raise ValueError(f"budget {budget} must exceed the design size {n_doe}")
    design = maximin_lhs_mixed(problem, n_doe, seed)
    return mixed_es(problem, budget, seed, design=design, algorithm="ms-es")


def run_ms_mkes(problem: MixedProblem, budget: Optional[int] = None, seed: int = 0,
                es_budget: int = ES_ACQ_BUDGET) -> RunHistory:
    """EGO with a compound-symmetry GP; EI is maximized over X x U by the mixed ES."""
    loop, _ = _start(problem, "ms-mkes", seed, budget)
    state = {"params": None}

    def step(it):
        model = loop.fit("compound", state["params"])
        state["params"] = model.params
        y_min = float(np.min(loop.y))

        def neg_ei(X, U):
            m, s = model.predict(X, U)
            return -ei_from_moments(m, s, y_min)

        res = es_minimize(neg_ei, problem.n_c, problem.levels, es_budget,
                          np.random.default_rng(loop.next_seed()))
        b = res.best_index
        point, moved = loop.dedup(res.X[b], res.U[b])
        loop.evaluate(point, "search", refit=True,
                      info={"ei": float(-res.f[b]), "shifted": moved,
                            "cs_correlation": list(model.params.cs_correlation)})

    return _finish(loop, step)


# ---------------------------------------------------------------------------
# Latent-variable loops

def _propose(loop: _Loop, ctx: AcquisitionContext, x_relaxed, info: dict, dual=None,
             refit: bool = True):
    """Recover levels at ``x_relaxed``, guard duplicates, evaluate and record."""
    u, ei_all = preimage(ctx, x_relaxed)
    chosen = int(np.ravel_multi_index(np.array(u) - 1, ctx.model.levels))
    if ei_all[chosen] < np.max(ei_all):
        raise AssertionError("pre-image is not the EI maximizer")
    point, moved = loop.dedup(x_relaxed, u)
    info = {**info, "ei": float(np.max(ei_all)), "shifted": moved}
    loop.evaluate(point, "search", dual=dual, info=info,
                  **_latent_fields(ctx.model, refit))


def _condition_fixed(loop: _Loop, params: GpParams) -> GpModel:
    try:
        return GpModel.condition(loop.X, loop.U, loop.y, params, loop.problem.levels)
    except IllConditionedModel as exc:
        raise RunAborted(f"conditioning with fixed parameters failed: {exc}") from exc


def run_lv_ego(problem: MixedProblem, budget: Optional[int] = None, seed: int = 0,
               refit_each_iter: bool = True) -> RunHistory:
    """Latent-variable EGO; ``refit_each_iter=False`` estimates parameters only once."""
    algo = "lv-ego" if refit_each_iter else "nr-lv-ego"
    loop, _ = _start(problem, algo, seed, budget)
    state = {"params": None, "z": None}
    n_c = problem.n_c

    def step(it):
        refit = refit_each_iter or state["params"] is None
        if refit:
            model = loop.fit("latent", state["params"])
            state["params"] = model.params
        else:
            model = _condition_fixed(loop, state["params"])
        ctx = AcquisitionContext.build(model, 0.0)
        space = ctx.space
        lower, upper = ctx.bounds(space)
        warm = [] if state["z"] is None else [_warm_point(space, *state["z"])]
        res = local_minimize(lambda z: float(f_t(ctx, z[:n_c], space.to_latent(z[n_c:]))[0]),
                             lower, upper, ACQ_CONFIG, loop.next_seed(), starts=warm)
        x = res.x[:n_c]
        _propose(loop, ctx, x, {"f": res.fun}, refit=refit)
        last = loop.hist.records[-1].point
        state["z"] = (last.x, last.u)

    return _finish(loop, step)


def _warm_point(space: RelaxedSpace, x, u) -> np.ndarray:
    """Previous proposal expressed in the current relaxed coordinates."""
    return np.concatenate([np.asarray(x, dtype=float), space.from_levels([u])[0]])


def run_alv_ego(problem: MixedProblem, budget: Optional[int] = None, seed: int = 0,
                dual: str = "global", constraint: str = "inequality",
                dual_config: GlobalDualConfig = GlobalDualConfig()) -> RunHistory:
    """Constrained relaxed search with augmented-Lagrangian multipliers."""
    if dual not in ("global", "local"):
        raise ValueError(f"dual must be 'global' or 'local', got {dual!r}")
    if constraint not in ("equality", "inequality"):
        raise ValueError(f"constraint must be 'equality' or 'inequality', got {constraint!r}")
    algo = f"alv-ego-{dual[0]}{constraint[0]}"
    eps = 0.0 if constraint == "equality" else EPSILON_INEQUALITY
    loop, _ = _start(problem, algo, seed, budget)
    state = {"params": None, "z": None, "dual": DualState(), "g_prev": None}
    n_c = problem.n_c

    def step(it):
        model = loop.fit("latent", state["params"])
        state["params"] = model.params
        ctx = AcquisitionContext.build(model, eps)
        warm = [] if state["z"] is None else [_warm_point(ctx.space, *state["z"])]
        if dual == "global":
            x, lat, ds, diag = auglag.global_dual_solve(ctx, loop.next_seed(), dual_config,
                                                        warm_starts=warm)
        else:
            if state["g_prev"] is not None:
                state["dual"] = auglag.local_dual_step(state["dual"], state["g_prev"])
            ds = state["dual"]
            x, lat, diag = auglag.local_dual_solve(ctx, ds, loop.next_seed(), ACQ_CONFIG,
                                                   warm_starts=warm)
        state["g_prev"] = diag["g"]
        _propose(loop, ctx, x, {"g": diag["g"], **{k: v for k, v in diag.items() if k != "g"}},
                 dual=ds.to_dict())
        last = loop.hist.records[-1].point
        state["z"] = (last.x, last.u)

    return _finish(loop, step)


# ---------------------------------------------------------------------------
# Dispatch

def run_algorithm(problem, algorithm: str, seed: int = 0,
                  budget: Optional[int] = None) -> RunHistory:
    """Run any algorithm by id on a problem (object or id)."""
    if isinstance(problem, str):
        problem = get_problem(problem)
    if algorithm == "ms-es":
        return run_ms_es(problem, budget, seed)
    if algorithm == "ms-mkes":
        return run_ms_mkes(problem, budget, seed)
    if algorithm == "lv-ego":
        return run_lv_ego(problem, budget, seed, refit_each_iter=True)
    if algorithm == "nr-lv-ego":
        return run_lv_ego(problem, budget, seed, refit_each_iter=False)
    if algorithm.startswith("alv-ego-") and len(algorithm) == 10:
        d, c = algorithm[-2], algorithm[-1]
        if d in "gl" and c in "ei":
            return run_alv_ego(problem, budget, seed,
                               dual="global" if d == "g" else "local",
                               constraint="equality" if c == "e" else "inequality")
    raise KeyError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
