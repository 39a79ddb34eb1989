"""Mixed continuous/categorical test problems.

Every problem takes continuous inputs rescaled to the unit hypercube and
categorical inputs encoded as 1-based level indices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when a point lies outside the problem's domain."""


@dataclass(frozen=True)
class MixedPoint:
    """A point of X x U: continuous part ``x`` and 1-based levels ``u``."""

    x: tuple[float, ...]
    u: tuple[int, ...]

    @classmethod
    def of(cls, x: Sequence[float], u: Sequence[int]) -> "MixedPoint":
        return cls(tuple(float(v) for v in np.atleast_1d(x)),
                   tuple(int(v) for v in np.atleast_1d(u)))

    def to_dict(self) -> dict:
        return {"x": list(self.x), "u": list(self.u)}

    @classmethod
    def from_dict(cls, d: dict) -> "MixedPoint":
        return cls.of(d["x"], d["u"])


@dataclass(frozen=True)
class MixedProblem:
    """A deterministic objective over ``[0, 1]^n_c x prod_j {1..m_j}``.

    ``known_optimum`` is only used for reporting; no algorithm reads it.
    ``n_doe`` pins the initial design size when the published protocol
    differs from the ``4 * n_c * n_d * max(m)`` rule.
    """

    name: str
    n_c: int
    levels: tuple[int, ...]
    objective: Callable[[np.ndarray, tuple[int, ...]], float] = field(repr=False)
    known_optimum: Optional[tuple[MixedPoint, float]] = None
    n_doe: Optional[int] = None

    def __post_init__(self):
        if self.n_c < 0 or len(self.levels) < 1:
            raise ValueError("need n_c >= 0 and at least one categorical variable")
        if any(m < 2 for m in self.levels):
            raise ValueError("every categorical variable needs at least 2 levels")

    @property
    def n_d(self) -> int:
        return len(self.levels)

    def validate(self, x, u) -> tuple[np.ndarray, tuple[int, ...]]:
        x = np.asarray(x, dtype=float).reshape(-1)
        u = tuple(int(v) for v in np.atleast_1d(u))
        if x.shape[0] != self.n_c or len(u) != self.n_d:
            raise DomainError(
                f"{self.name}: expected {self.n_c} continuous and {self.n_d} "
                f"categorical values, got {x.shape[0]} and {len(u)}")
        if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
            raise DomainError(f"{self.name}: continuous input {x} outside [0, 1]")
        for uj, m in zip(u, self.levels):
            if not 1 <= uj <= m:
                raise DomainError(f"{self.name}: level {uj} outside 1..{m}")
        return x, u

    def __call__(self, x, u) -> float:
        x, u = self.validate(x, u)
        return float(self.objective(x, u))

    def evaluate(self, point: MixedPoint) -> float:
        return self(point.x, point.u)


# ---------------------------------------------------------------------------
# Discretized Branin-Hoo

BRANIN_LEVELS = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)


def _branin(a1: float, a2: float) -> float:
    b = 5.1 / (4.0 * math.pi ** 2)
    c = 5.0 / math.pi
    r, s, t = 6.0, 10.0, 1.0 / (8.0 * math.pi)
    return (a2 - b * a1 ** 2 + c * a1 - r) ** 2 + s * (1.0 - t) * math.cos(a1) + s


def _branin_objective(x, u):
    a1 = -5.0 + 15.0 * x[0]
    a2 = 15.0 * BRANIN_LEVELS[u[0] - 1]
    return _branin(a1, a2)


def branin_discretized(p: MixedPoint) -> float:
    """Branin-Hoo with its second input restricted to four levels."""
    return BRANIN.evaluate(p)


# ---------------------------------------------------------------------------
# Discretized Goldstein-Price

GOLDSTEIN_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)


def _goldstein(a: float, b: float) -> float:
    t1 = 1.0 + (a + b + 1.0) ** 2 * (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b
                                     + 6.0 * a * b + 3.0 * b * b)
    t2 = 30.0 + (2.0 * a - 3.0 * b) ** 2 * (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b
                                            - 36.0 * a * b + 27.0 * b * b)
    return t1 * t2


def _goldstein_objective(x, u):
    return _goldstein(-2.0 + 4.0 * x[0], -2.0 + 4.0 * GOLDSTEIN_LEVELS[u[0] - 1])


def goldstein_discretized(p: MixedPoint) -> float:
    return GOLDSTEIN.evaluate(p)


# ---------------------------------------------------------------------------
# Discretized Hartmann-6

HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMANN_A = np.array([
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
])
HARTMANN_P = 1e-4 * np.array([
    [1312, 1696, 5569, 124, 8283, 5886],
    [2329, 4135, 8307, 3736, 1004, 9991],
    [2348, 1451, 3522, 2883, 3047, 6650],
    [4047, 8828, 8732, 5743, 1091, 381],
], dtype=float)
HARTMANN_X5_LEVELS = (0.350, 0.257, 0.477, 0.312, 0.657)
HARTMANN_X6_LEVELS = (0.150, 0.657, 0.512, 0.741)


def _hartmann_objective(x, u):
    z = np.concatenate([x, [HARTMANN_X5_LEVELS[u[0] - 1], HARTMANN_X6_LEVELS[u[1] - 1]]])
    inner = np.sum(HARTMANN_A * (z - HARTMANN_P) ** 2, axis=1)
    return float(-np.sum(HARTMANN_ALPHA * np.exp(-inner)))


def hartmann_discretized(p: MixedPoint) -> float:
    return HARTMANN.evaluate(p)


# ---------------------------------------------------------------------------
# Cantilever beam: deflection plus weighted weight

BEAM_INERTIA = (0.083, 0.139, 0.380, 0.080, 0.133, 0.363,
                0.086, 0.136, 0.360, 0.092, 0.138, 0.369)
BEAM_LOAD = 600.0
BEAM_YOUNG = 600.0
BEAM_ALPHA = 60.0


def beam_deflection(length: float, section: float, inertia: float) -> float:
    return BEAM_LOAD * length ** 3 / (3.0 * BEAM_YOUNG * section ** 2 * inertia)


def _beam_objective(x, u):
    length = 10.0 + 10.0 * x[0]
    section = 1.0 + x[1]
    return (beam_deflection(length, section, BEAM_INERTIA[u[0] - 1])
            + BEAM_ALPHA * length * section)


def beam_bending(p: MixedPoint) -> float:
    return BEAM.evaluate(p)


BRANIN = MixedProblem(
    "branin", 1, (4,), _branin_objective,
    known_optimum=(MixedPoint((0.15869983,), (3,)), 2.791184),
)
GOLDSTEIN = MixedProblem(
    "goldstein", 1, (5,), _goldstein_objective,
    known_optimum=(MixedPoint((0.5,), (2,)), 3.0),
    n_doe=40,
)
HARTMANN = MixedProblem(
    "hartmann", 4, (5, 4), _hartmann_objective,
    known_optimum=(MixedPoint((0.202, 0.150, 0.477, 0.275), (4, 2)), -3.322),
)
BEAM = MixedProblem(
    "beam", 2, (12,), _beam_objective,
    known_optimum=(MixedPoint((0.0, 0.43), (3,)), 1287.385),
)

PROBLEMS: dict[str, MixedProblem] = {p.name: p for p in (BRANIN, GOLDSTEIN, HARTMANN, BEAM)}


def get_problem(name: str) -> MixedProblem:
    try:
        return PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
