import numpy as np
import pytest

from lvego import algorithms
from lvego.algorithms import (ALGORITHMS, _Loop, doe_size, run_algorithm,
                              run_ms_mkes)
from lvego.auglag import rho_grid
from lvego.gp import FitError
from lvego.history import RunHistory
from lvego.problems import BRANIN, PROBLEMS, MixedPoint

SHORT = 20  # 4 search iterations after the 16-point branin design


def test_doe_sizes():
    assert {n: doe_size(PROBLEMS[n]) for n in ("branin", "goldstein", "hartmann", "beam")} == \
        {"branin": 16, "goldstein": 40, "hartmann": 160, "beam": 96}


def test_bad_arguments():
    with pytest.raises(ValueError):
        run_algorithm("branin", "lv-ego", 0, budget=16)
    with pytest.raises(KeyError):
        run_algorithm("branin", "alv-ego-xx", 0, budget=20)


@pytest.fixture(scope="module")
def short_runs():
    return {a: run_algorithm("branin", a, seed=1, budget=SHORT) for a in ALGORITHMS}


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_run_invariants(short_runs, algo):
    h = short_runs[algo]
    assert h.status == "complete" and len(h) == SHORT == h.budget
    assert h.algorithm == algo and h.n_doe == 16
    assert [r.phase for r in h.records] == ["doe"] * 16 + ["search"] * 4
    assert np.all(np.diff(h.best_so_far) <= 0)
    for r in h.records:
        BRANIN.validate(r.point.x, r.point.u)
        assert r.y == BRANIN(r.point.x, r.point.u)
    # The reported optimum is the argmin of every evaluation.
    point, y = h.best_point()
    assert y == h.y.min() == h.best_so_far[-1]
    # No exact repeats.
    keys = {(tuple(r.point.x), tuple(r.point.u)) for r in h.records}
    assert len(keys) == len(h)


def test_all_loops_share_the_design(short_runs):
    ref = short_runs["lv-ego"]
    for h in short_runs.values():
        assert np.array_equal(h.X[:16], ref.X[:16]) and np.array_equal(h.U[:16], ref.U[:16])


def test_nr_lv_ego_keeps_its_latent_map(short_runs):
    recs = short_runs["nr-lv-ego"].search_records()
    assert len({r.latent_digest for r in recs}) == 1
    assert [r.refit for r in recs] == [True, False, False, False]
    lv = short_runs["lv-ego"].search_records()
    assert all(r.refit for r in lv)


def test_dual_states(short_runs):
    grid = rho_grid()
    for algo in ("alv-ego-ge", "alv-ego-gi"):
        for r in short_runs[algo].search_records():
            assert r.dual["rho"] in grid
    for algo in ("alv-ego-le", "alv-ego-li"):
        rhos = []
        for r in short_runs[algo].search_records():
            assert r.dual["lambda"] >= 0
            rhos.append(r.dual["rho"])
        assert np.all(np.diff(rhos) >= 0)  # the penalty only ever doubles
    first = short_runs["alv-ego-li"].search_records()[0].dual
    assert first == {"lambda": 0.0, "rho": 1.0}


@pytest.mark.parametrize("algo", ["lv-ego", "alv-ego-li", "ms-es"])
def test_determinism(short_runs, algo):
    again = run_algorithm("branin", algo, seed=1, budget=SHORT)
    assert again.canonical_json() == short_runs[algo].canonical_json()


def test_ms_mkes_full_budget():
    h = run_ms_mkes(BRANIN, 66, seed=0)
    assert len(h) == 66 and h.status == "complete"
    assert all(r.info["cs_correlation"] for r in h.search_records())


def test_fit_failure_aborts_with_partial_history(monkeypatch):
    def broken(*args, **kwargs):
        raise FitError("boom")

    monkeypatch.setattr(algorithms, "fit", broken)
    h = run_algorithm("branin", "lv-ego", seed=0, budget=SHORT)
    assert h.status == "aborted" and len(h) == 16 and "twice" in h.message


def test_dedup_and_mixed_points_only():
    hist = RunHistory("branin", "test", 0, 1, 3)
    loop = _Loop(BRANIN, hist, np.random.default_rng(0))
    loop.evaluate(MixedPoint.of([0.5], [2]), "doe")
    p, moved = loop.dedup([0.5], [2])
    assert moved and 0 < abs(p.x[0] - 0.5) <= 0.05
    p, moved = loop.dedup([0.5], [3])
    assert not moved and p == MixedPoint.of([0.5], [3])
    with pytest.raises(TypeError):
        loop.evaluate(np.array([0.5, 0.1, 0.2]), "search")
