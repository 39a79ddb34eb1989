import csv
import json

import numpy as np
import pytest

from lvego.bench.cli import main
from lvego.bench.metrics import (CSV_HEADER, EmptyStoreError, compute_metrics, compute_targets,
                                 export, iteration_to_target, latent_correlation_rows,
                                 load_report)
from lvego.bench.store import CampaignConfig, ResultStore, run_campaign, write_histories
from lvego.history import RunHistory
from lvego.problems import MixedPoint


def _synthetic(problem, algorithm, seed, ys, n_doe=2):
    h = RunHistory(problem, algorithm, seed, n_doe, len(ys), status="complete")
    for i, y in enumerate(ys):
        h.append(MixedPoint.of([i / 100], [1]), float(y), "doe" if i < n_doe else "search", 0.0)
    return h


def test_targets_examples():
    runs = [_synthetic("p", "a", s, np.arange(1, 101)[s::4]) for s in range(4)]
    assert compute_targets(runs, "p")[0.5] == 50.5
    const = [_synthetic("p", "a", 0, [7.0] * 5)]
    assert set(compute_targets(const, "p").values()) == {7.0}
    with pytest.raises(EmptyStoreError):
        compute_targets(runs, "other")


def test_targets_sort_oracle_and_order():
    rng = np.random.default_rng(0)
    runs = [_synthetic("p", a, s, rng.normal(size=30)) for a in ("a", "b") for s in range(10)]
    t = compute_targets(runs, "p")
    pool = np.sort(np.concatenate([h.y for h in runs]))
    for q, v in t.items():
        pos = q * (pool.size - 1)
        lo = int(np.floor(pos))
        oracle = pool[lo] + (pos - lo) * (pool[min(lo + 1, pool.size - 1)] - pool[lo])
        assert v == pytest.approx(oracle, abs=1e-12)
    assert t[0.1] <= t[0.25] <= t[0.5]


def test_metrics_examples():
    runs = [_synthetic("p", "good", s, [5, 4, 1, 0]) for s in range(3)]
    runs += [_synthetic("p", "bad", s, [5, 4, 4 + s, 4]) for s in range(3)]
    single = _synthetic("q", "good", 0, [3, 1, 2, 0.5])
    rep = compute_metrics(runs + [single])
    bad = rep.get("p", "bad")
    assert bad.success_rate[0.1] == 0.0
    good = rep.get("p", "good")
    assert good.iqr == [0.0] * 4 and good.median == [5, 4, 1, 0]
    assert rep.get("q", "good").median == list(single.best_so_far)
    for e in rep.entries:
        assert all(0 <= v <= 1 for v in e.success_rate.values())
    # Averages over problems are plain means.
    q_rate = rep.get("q", "good").success_rate[0.5]
    assert rep.averaged["good"]["success_rate"][0.5] == pytest.approx(
        0.5 * (good.success_rate[0.5] + q_rate))


def test_iteration_to_target():
    curve = np.array([9, 8, 5, 5, 2])
    assert iteration_to_target(curve, 2, 5) == 1
    assert iteration_to_target(curve, 2, 8.5) == 0
    assert iteration_to_target(curve, 2, 1) is None


def test_export_csv_and_json(tmp_path):
    runs = [_synthetic(p, a, s, [5, 3, 2, 1]) for p in ("p", "q") for a in ("a", "b")
            for s in range(2)]
    rep = compute_metrics(runs)
    paths = export(rep, tmp_path / "csv", "csv")
    with paths[0].open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_HEADER)
    assert ",".join(rows[0]) == "problem,algorithm,iteration,statistic,value"
    assert len(rows) - 1 == 2 * 2 * 4 * 2
    (path,) = export(rep, tmp_path / "json", "json")
    assert load_report(path) == rep
    with pytest.raises(ValueError):
        export(rep, tmp_path, "xml")


def test_campaign_accounting_and_determinism(tmp_path):
    cfg = CampaignConfig(("branin",), ("ms-es", "lv-ego"), reps=3, budget_extra=2)
    a = run_campaign(cfg, tmp_path / "a")
    b = run_campaign(cfg, tmp_path / "b")
    files = sorted(p.name for p in (tmp_path / "a").glob("*.json") if p.name != "manifest.json")
    assert len(files) == 6 and "branin-lv-ego-2.json" in files
    for h1, h2 in zip(a.histories(), b.histories()):
        assert h1.canonical_json() == h2.canonical_json()
    assert all(len(h) == 18 for h in a.histories())
    assert len(a.manifest()["runs"]) == 6
    with pytest.raises(ValueError):
        CampaignConfig(("nope",), ("ms-es",))


def test_latent_rows_from_store(tmp_path):
    cfg = CampaignConfig(("branin",), ("lv-ego",), reps=1, budget_extra=2)
    store = run_campaign(cfg, tmp_path)
    rows = latent_correlation_rows(store.load("branin-lv-ego-0"))
    assert len(rows) == 2 * 16
    diag = [r["correlation"] for r in rows if r["level_i"] == r["level_j"]]
    assert np.allclose(diag, 1.0)


def test_cli_smoke(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problems": ["branin"], "algorithms": ["ms-es"], "reps": 2,
                               "base_seed": 0, "budget_extra": 3}))
    store = tmp_path / "store"
    assert main(["run", "--config", str(cfg), "--store", str(store)]) == 0
    assert main(["metrics", "--store", str(store), "--out", str(tmp_path / "m"),
                 "--format", "json"]) == 0
    assert (tmp_path / "m" / "metrics.json").exists()
    assert main(["single", "--problem", "branin", "--algo", "lv-ego", "--seed", "0",
                 "--budget", "18", "--store", str(tmp_path / "s")]) == 0
    assert "branin-lv-ego-0" in capsys.readouterr().out
    out = tmp_path / "diag.csv"
    assert main(["latent-diag", "--store", str(tmp_path / "s"), "--run", "branin-lv-ego-0",
                 "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "iteration,variable,level_i,level_j,correlation"
    with pytest.raises(SystemExit):
        main(["single", "--problem", "branin", "--algo", "rf"])


def test_store_roundtrip(tmp_path):
    h = _synthetic("p", "a", 0, [3, 2, 1])
    store = write_histories(tmp_path, [h])
    assert store.load("p-a-0").canonical_json() == h.canonical_json()
    assert ResultStore(tmp_path).histories("p")[0].run_id == "p-a-0"
