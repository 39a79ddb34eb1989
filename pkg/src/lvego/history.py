"""Per-evaluation run records and their JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .problems import MixedPoint


def _plain(v):
    """Convert numpy scalars and arrays to JSON-native values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


@dataclass
class RunRecord:
    """One objective evaluation.

    ``phase`` is ``"doe"`` for initial-design points and ``"search"`` for
    points proposed by the optimizer. ``timestamp`` is wall-clock time and is
    left out of the canonical serialization.
    """

    index: int
    point: MixedPoint
    y: float
    best: float
    phase: str
    timestamp: float = 0.0
    refit: bool = False
    dual: Optional[dict] = None
    latent_digest: Optional[str] = None
    latent: Optional[list] = None
    info: dict = field(default_factory=dict)

    def to_dict(self, timestamps: bool = True) -> dict:
        d = {"index": self.index, **self.point.to_dict(), "y": self.y, "best": self.best,
             "phase": self.phase, "refit": self.refit, "dual": self.dual,
             "latent_digest": self.latent_digest, "latent": self.latent, "info": self.info}
        if timestamps:
            d["timestamp"] = self.timestamp
        return _plain(d)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(d["index"], MixedPoint.of(d["x"], d["u"]), d["y"], d["best"], d["phase"],
                   d.get("timestamp", 0.0), d.get("refit", False), d.get("dual"),
                   d.get("latent_digest"), d.get("latent"), d.get("info", {}))


@dataclass
class RunHistory:
    problem: str
    algorithm: str
    seed: int
    n_doe: int
    budget: int
    records: list[RunRecord] = field(default_factory=list)
    status: str = "running"
    message: str = ""

    @property
    def run_id(self) -> str:
        return f"{self.problem}-{self.algorithm}-{self.seed}"

    def append(self, point: MixedPoint, y: float, phase: str, timestamp: float,
               **extra: Any) -> RunRecord:
        best = y if not self.records else min(self.records[-1].best, y)
        rec = RunRecord(len(self.records), point, float(y), float(best), phase, timestamp,
                        **extra)
        self.records.append(rec)
        return rec

    def __len__(self) -> int:
        return len(self.records)

    @property
    def y(self) -> np.ndarray:
        return np.array([r.y for r in self.records])

    @property
    def best_so_far(self) -> np.ndarray:
        return np.array([r.best for r in self.records])

    @property
    def X(self) -> np.ndarray:
        return np.array([r.point.x for r in self.records], dtype=float)

    @property
    def U(self) -> np.ndarray:
        return np.array([r.point.u for r in self.records], dtype=int)

    def best_point(self) -> tuple[MixedPoint, float]:
        """Argmin over all evaluations (first one on ties)."""
        i = int(np.argmin(self.y))
        return self.records[i].point, self.records[i].y

    def search_records(self) -> list[RunRecord]:
        return [r for r in self.records if r.phase == "search"]

    def to_dict(self, timestamps: bool = True) -> dict:
        return {"problem": self.problem, "algorithm": self.algorithm, "seed": self.seed,
                "n_doe": self.n_doe, "budget": self.budget, "status": self.status,
                "message": self.message,
                "records": [r.to_dict(timestamps) for r in self.records]}

    def to_json(self, timestamps: bool = True) -> str:
        return json.dumps(self.to_dict(timestamps), sort_keys=True, indent=1)

    def canonical_json(self) -> str:
        """Serialization without wall-clock fields; byte-identical for identical runs."""
        return self.to_json(timestamps=False)

    @classmethod
    def from_dict(cls, d: dict) -> "RunHistory":
        return cls(d["problem"], d["algorithm"], d["seed"], d["n_doe"], d["budget"],
                   [RunRecord.from_dict(r) for r in d["records"]], d.get("status", "complete"),
                   d.get("message", ""))

    @classmethod
    def from_json(cls, text: str) -> "RunHistory":
        return cls.from_dict(json.loads(text))
