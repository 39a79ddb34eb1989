import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvego.doe import maximin_lhs_mixed
from lvego.optimizers import (LocalSearchConfig, OptimizerError, es_minimize, local_minimize,
                              mixed_es)
from lvego.problems import BRANIN, MixedProblem


def test_config_validation():
    with pytest.raises(ValueError):
        LocalSearchConfig(restarts=0)
    with pytest.raises(ValueError):
        LocalSearchConfig(tol=0)
    with pytest.raises(ValueError):
        LocalSearchConfig(method="nelder-mead")


@pytest.mark.parametrize("method", ["compass", "cobyla", "lbfgs"])
def test_convex_1d(method):
    res = local_minimize(lambda x: (x[0] - 0.3) ** 2, [0.0], [1.0],
                         LocalSearchConfig(restarts=10, method=method), seed=0)
    assert abs(res.x[0] - 0.3) <= 1e-4


def test_flat_landscape():
    res = local_minimize(lambda x: 7.0, [0, 0], [1, 1], seed=1)
    assert res.fun == 7.0 and np.all((res.x >= 0) & (res.x <= 1))


def test_rosenbrock_beats_every_start():
    def rosen(x):
        a, b = -2 + 4 * x[0], -1 + 4 * x[1]
        return (1 - a) ** 2 + 100 * (b - a * a) ** 2

    res = local_minimize(rosen, [0, 0], [1, 1], LocalSearchConfig(restarts=10), seed=2)
    assert len(res.start_values) == 10
    assert np.all(res.fun <= res.start_values)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.floats(-3, 3), st.floats(-3, 3))
def test_stays_in_box(seed, c1, c2):
    lo, hi = np.array([-1.0, 0.5]), np.array([0.0, 2.0])
    res = local_minimize(lambda x: (x[0] - c1) ** 2 + (x[1] - c2) ** 2, lo, hi,
                         LocalSearchConfig(restarts=3, max_evals_per_restart=100), seed=seed)
    assert np.all(res.x >= lo) and np.all(res.x <= hi)
    assert np.all(res.fun <= res.start_values)


def test_warm_start_is_first_restart():
    res = local_minimize(lambda x: np.sum(x ** 2), [-1, -1], [1, 1],
                         LocalSearchConfig(restarts=3), seed=0, starts=[[0.5, -0.25]])
    assert np.allclose(res.start_points[0], [0.5, -0.25])


def test_non_finite_restarts_abort():
    with pytest.raises(OptimizerError):
        local_minimize(lambda x: np.nan, [0], [1], LocalSearchConfig(restarts=2), seed=0)
    # One bad region does not sink the whole search.
    res = local_minimize(lambda x: np.inf if x[0] > 0.9 else (x[0] - 0.2) ** 2, [0], [1],
                         LocalSearchConfig(restarts=4), seed=0)
    assert abs(res.x[0] - 0.2) < 1e-4


def test_screening_keeps_best_candidates():
    calls = []

    def f(x):
        calls.append(x.copy())
        return float(np.sum((x - 0.7) ** 2))

    res = local_minimize(f, [0, 0], [1, 1], LocalSearchConfig(restarts=2, screen=50), seed=0)
    assert res.n_evals == len(calls) and res.n_evals > 50
    assert res.fun < 1e-8


def test_seeded_determinism():
    f = lambda x: np.sin(5 * x[0]) + x[1] ** 2  # noqa: E731
    a = local_minimize(f, [0, 0], [1, 1], seed=4)
    b = local_minimize(f, [0, 0], [1, 1], seed=4)
    assert np.array_equal(a.x, b.x) and a.fun == b.fun


def _sphere_problem():
    return MixedProblem("sphere", 2, (3,),
                        lambda x, u: float(np.sum((x - 0.4) ** 2) + (u[0] != 2)), n_doe=5)


def test_es_exact_budget_and_elitism():
    calls = []

    def func(X, U):
        calls.append(len(X))
        return np.sum((X - 0.4) ** 2, axis=1) + (U[:, 0] != 2)

    res = es_minimize(func, 2, (3,), 57, np.random.default_rng(0))
    assert sum(calls) == 57 == len(res.f)
    best = np.minimum.accumulate(res.f)
    assert np.all(np.diff(best) <= 0)
    assert res.f.min() < 0.05


def test_mixed_es_history():
    prob = _sphere_problem()
    h = mixed_es(prob, 60, seed=3)
    assert len(h) == 60 and h.status == "complete"
    assert np.all(np.diff(h.best_so_far) <= 0)
    h2 = mixed_es(prob, 60, seed=3)
    assert h.canonical_json() == h2.canonical_json()
    d = maximin_lhs_mixed(prob, 5, 0)
    h3 = mixed_es(prob, 20, seed=3, design=d)
    assert [r.phase for r in h3.records] == ["doe"] * 5 + ["search"] * 15
    assert np.array_equal(h3.X[:5], d.X)


def test_mixed_es_on_branin():
    h = mixed_es(BRANIN, 66, seed=0)
    assert len(h) == 66
    for r in h.records:
        BRANIN.validate(r.point.x, r.point.u)
