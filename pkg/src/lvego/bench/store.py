"""Campaign configuration, execution and the on-disk result store."""
from __future__ import annotations

import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from ..algorithms import ALGORITHMS, BUDGET_EXTRA, doe_size, run_algorithm
from ..history import RunHistory
from ..problems import PROBLEMS, get_problem

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


@dataclass(frozen=True)
class CampaignConfig:
    problems: tuple[str, ...]
    algorithms: tuple[str, ...]
    reps: int = 10
    base_seed: int = 0
    budget_extra: int = BUDGET_EXTRA

    def __post_init__(self):
        object.__setattr__(self, "problems", tuple(self.problems))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        for p in self.problems:
            if p not in PROBLEMS:
                raise ValueError(f"unknown problem {p!r}")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        if self.reps < 1 or self.budget_extra < 1:
            raise ValueError("reps and budget_extra must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        return cls(tuple(d["problems"]), tuple(d["algorithms"]), int(d.get("reps", 10)),
                   int(d.get("base_seed", 0)), int(d.get("budget_extra", BUDGET_EXTRA)))

    @classmethod
    def load(cls, path) -> "CampaignConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def jobs(self) -> list[tuple[str, str, int, int]]:
        """(problem, algorithm, seed, budget) for every run, in a fixed order."""
        out = []
        for p in self.problems:
            budget = doe_size(get_problem(p)) + self.budget_extra
            for a in self.algorithms:
                for r in range(self.reps):
                    out.append((p, a, self.base_seed + r, budget))
        return out


def run_file_name(problem: str, algorithm: str, seed: int) -> str:
    return f"{problem}-{algorithm}-{seed}.json"


class ResultStore:
    """Directory of run histories, one JSON file per run, indexed by a manifest."""

    def __init__(self, root):
        self.root = Path(root)

    def write(self, hist: RunHistory) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / run_file_name(hist.problem, hist.algorithm, hist.seed)
        path.write_text(hist.to_json())
        return path

    def write_manifest(self, config: Optional[CampaignConfig], entries: list[dict]):
        self.root.mkdir(parents=True, exist_ok=True)
        doc = {"config": asdict(config) if config else None,
               "runs": sorted(entries, key=lambda e: e["file"])}
        (self.root / MANIFEST).write_text(json.dumps(doc, sort_keys=True, indent=1))

    def manifest(self) -> dict:
        path = self.root / MANIFEST
        if path.exists():
            return json.loads(path.read_text())
        return {"config": None, "runs": [{"file": p.name} for p in self._run_files()]}

    def _run_files(self) -> list[Path]:
        return sorted(p for p in self.root.glob("*.json") if p.name != MANIFEST)

    def load(self, run_id: str) -> RunHistory:
        name = run_id if run_id.endswith(".json") else run_id + ".json"
        return RunHistory.from_json((self.root / name).read_text())

    def histories(self, problem: Optional[str] = None,
                  complete_only: bool = True) -> list[RunHistory]:
        out = []
        for path in self._run_files():
            h = RunHistory.from_json(path.read_text())
            if problem is not None and h.problem != problem:
                continue
            if complete_only and h.status != "complete":
                continue
            out.append(h)
        return out


def _run_job(job) -> tuple[Optional[RunHistory], Optional[str]]:
    problem, algorithm, seed, budget = job
    try:
        return run_algorithm(problem, algorithm, seed, budget), None
    except Exception:  # a failing run is recorded and the campaign goes on
        return None, traceback.format_exc()


def run_campaign(config: CampaignConfig, store_dir, workers: int = 1) -> ResultStore:
    """Execute every (problem, algorithm, repetition) run and persist each history.

    Seeds are ``base_seed + rep``. Runs share no state, so ``workers > 1``
    uses a process pool; results are written in job order either way.
    """
    store = ResultStore(store_dir)
    jobs = config.jobs()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = map(_run_job, jobs)
    entries = []
    for job, (hist, err) in zip(jobs, results):
        problem, algorithm, seed, _ = job
        name = run_file_name(problem, algorithm, seed)
        if hist is None:
            log.warning("run %s failed:\n%s", name, err)
            entries.append({"file": name, "status": "failed", "error": err.splitlines()[-1]})
            continue
        store.write(hist)
        entries.append({"file": name, "status": hist.status})
        log.info("finished %s: best %.6g", name, hist.best_so_far[-1])
    store.write_manifest(config, entries)
    return store


def write_histories(store_dir, histories: Iterable[RunHistory]) -> ResultStore:
    """Persist already-computed histories as a store (with a manifest)."""
    store = ResultStore(store_dir)
    entries = []
    for h in histories:
        store.write(h)
        entries.append({"file": run_file_name(h.problem, h.algorithm, h.seed),
                        "status": h.status})
    store.write_manifest(None, entries)
    return store
