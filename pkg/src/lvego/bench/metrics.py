"""Convergence curves and target-based metrics over a set of runs.

A target is a quantile of every objective value evaluated by every run of
every algorithm on a problem. For each algorithm the report gives the
median and interquartile range of the best-so-far curves, the first search
iteration at which the median curve reaches each target, and the share of
runs whose final best value reaches it.
"""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..history import RunHistory

TARGET_LEVELS = (0.10, 0.25, 0.50)
CURVE_STATISTICS = ("median", "iqr")
CSV_HEADER = ("problem", "algorithm", "iteration", "statistic", "value")


class EmptyStoreError(ValueError):
    pass


def _histories(source, problem: Optional[str] = None) -> list[RunHistory]:
    if hasattr(source, "histories"):
        return source.histories(problem)
    return [h for h in source if problem is None or h.problem == problem]


def compute_targets(source, problem: str, levels: Sequence[float] = TARGET_LEVELS) -> dict:
    """Quantiles (linear interpolation) of all evaluated values on ``problem``.

    ``source`` is a ``ResultStore`` or an iterable of ``RunHistory``.
    """
    pool = [h.y for h in _histories(source, problem)]
    if not pool:
        raise EmptyStoreError(f"no completed runs for problem {problem!r}")
    values = np.concatenate(pool)
    return {float(q): float(np.quantile(values, q)) for q in levels}


@dataclass
class AlgorithmMetrics:
    problem: str
    algorithm: str
    n_runs: int
    n_doe: int
    median: list[float]
    iqr: list[float]
    iteration_to_target: dict = field(default_factory=dict)
    success_rate: dict = field(default_factory=dict)


@dataclass
class MetricsReport:
    targets: dict
    entries: list[AlgorithmMetrics]
    averaged: dict = field(default_factory=dict)

    def get(self, problem: str, algorithm: str) -> AlgorithmMetrics:
        for e in self.entries:
            if e.problem == problem and e.algorithm == algorithm:
                return e
        raise KeyError((problem, algorithm))

    def to_dict(self) -> dict:
        return {"targets": {p: {str(q): v for q, v in t.items()} for p, t in self.targets.items()},
                "entries": [_entry_dict(e) for e in self.entries],
                "averaged": {a: {k: {str(q): v for q, v in d.items()} for k, d in m.items()}
                             for a, m in self.averaged.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        def keyed(m):
            return {float(q): v for q, v in m.items()}
        entries = []
        for e in d["entries"]:
            e = dict(e)
            e["iteration_to_target"] = keyed(e["iteration_to_target"])
            e["success_rate"] = keyed(e["success_rate"])
            entries.append(AlgorithmMetrics(**e))
        return cls({p: keyed(t) for p, t in d["targets"].items()}, entries,
                   {a: {k: keyed(v) for k, v in m.items()} for a, m in d["averaged"].items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, MetricsReport) and self.to_dict() == other.to_dict()


def _entry_dict(e: AlgorithmMetrics) -> dict:
    d = asdict(e)
    d["iteration_to_target"] = {str(q): v for q, v in e.iteration_to_target.items()}
    d["success_rate"] = {str(q): v for q, v in e.success_rate.items()}
    return d


def iteration_to_target(curve: np.ndarray, n_doe: int, target: float) -> Optional[int]:
    """First search iteration (1 = first evaluation after the design) with ``curve <= target``.

    Returns 0 when the design alone reaches the target and None when never reached.
    """
    hit = np.flatnonzero(np.asarray(curve) <= target)
    if hit.size == 0:
        return None
    return int(max(hit[0] - n_doe + 1, 0))


def algorithm_metrics(runs: list[RunHistory], targets: dict) -> AlgorithmMetrics:
    curves = np.array([h.best_so_far for h in runs])
    med = np.median(curves, axis=0)
    q25, q75 = np.quantile(curves, [0.25, 0.75], axis=0)
    finals = curves[:, -1]
    n_doe = runs[0].n_doe
    return AlgorithmMetrics(
        runs[0].problem, runs[0].algorithm, len(runs), n_doe,
        [float(v) for v in med], [float(v) for v in q75 - q25],
        {q: iteration_to_target(med, n_doe, t) for q, t in targets.items()},
        {q: float(np.mean(finals <= t)) for q, t in targets.items()})


def compute_metrics(source, targets: Optional[dict] = None) -> MetricsReport:
    """All metric families for every (problem, algorithm) in ``source``.

    ``targets`` maps problem -> {level: value}; missing problems get
    ``compute_targets``. Cross-problem averages are plain means of the
    per-problem success rates and of the iterations to target (the latter
    only when every problem reached the target, otherwise None).
    """
    runs = _histories(source)
    if not runs:
        raise EmptyStoreError("no completed runs")
    groups = defaultdict(list)
    for h in runs:
        groups[(h.problem, h.algorithm)].append(h)
    targets = dict(targets or {})
    for p in sorted({h.problem for h in runs}):
        if p not in targets:
            targets[p] = compute_targets(runs, p)
    entries = []
    for (p, a) in sorted(groups):
        group = sorted(groups[(p, a)], key=lambda h: h.seed)
        entries.append(algorithm_metrics(group, targets[p]))

    averaged = {}
    for a in sorted({e.algorithm for e in entries}):
        mine = [e for e in entries if e.algorithm == a]
        levels = sorted(mine[0].success_rate)
        sr = {q: float(np.mean([e.success_rate[q] for e in mine])) for q in levels}
        it = {}
        for q in levels:
            vals = [e.iteration_to_target[q] for e in mine]
            it[q] = None if any(v is None for v in vals) else float(np.mean(vals))
        averaged[a] = {"success_rate": sr, "iteration_to_target": it}
    return MetricsReport(targets, entries, averaged)


# ---------------------------------------------------------------------------
# Export

def curve_rows(report: MetricsReport) -> list[tuple]:
    """Long-format curve rows; iterations are 1-based evaluation counts."""
    rows = []
    for e in report.entries:
        for stat in CURVE_STATISTICS:
            for i, v in enumerate(getattr(e, stat), start=1):
                rows.append((e.problem, e.algorithm, i, stat, v))
    return rows


def target_rows(report: MetricsReport) -> list[dict]:
    rows = []
    for e in report.entries:
        for q, t in report.targets[e.problem].items():
            rows.append({"problem": e.problem, "algorithm": e.algorithm, "target_level": q,
                         "target_value": t,
                         "iteration_to_median_success": e.iteration_to_target[q],
                         "success_rate": e.success_rate[q]})
    return rows


def averaged_rows(report: MetricsReport) -> list[dict]:
    rows = []
    for a, m in report.averaged.items():
        for q in sorted(m["success_rate"]):
            rows.append({"algorithm": a, "target_level": q,
                         "success_rate": m["success_rate"][q],
                         "iteration_to_median_success": m["iteration_to_target"][q]})
    return rows


def _write_csv(path: Path, rows: list[dict]):
    with path.open("w", newline="") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def export(report: MetricsReport, out_dir, fmt: str = "csv") -> list[Path]:
    """Write curves and target tables to ``out_dir`` as CSV files or one JSON file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out / "metrics.json"
        path.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=1))
        return [path]
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}; use csv or json")
    curves = out / "curves.csv"
    with curves.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        w.writerows(curve_rows(report))
    targets = out / "targets.csv"
    _write_csv(targets, target_rows(report))
    averaged = out / "averaged.csv"
    _write_csv(averaged, averaged_rows(report))
    return [curves, targets, averaged]


def load_report(path) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(Path(path).read_text()))


def latent_correlation_rows(hist: RunHistory) -> list[dict]:
    """Per-iteration level correlation matrices from a latent-variable run."""
    from ..gp import LatentMap, latent_correlation

    rows = []
    for it, rec in enumerate(hist.search_records(), start=1):
        if rec.latent is None:
            continue
        for j, phi in enumerate(LatentMap.from_list(rec.latent).phi):
            C = latent_correlation(phi)
            for a in range(C.shape[0]):
                for b in range(C.shape[1]):
                    rows.append({"iteration": it, "variable": j + 1, "level_i": a + 1,
                                 "level_j": b + 1, "correlation": float(C[a, b])})
    return rows
