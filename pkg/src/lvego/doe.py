"""Seeded Latin hypercube designs for continuous and mixed spaces."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .problems import MixedPoint, MixedProblem


@dataclass(frozen=True)
class Design:
    X: np.ndarray
    U: np.ndarray
    seed: int
    criterion_value: float
    candidate_values: tuple[float, ...] = field(default=(), repr=False)

    @property
    def points(self) -> list[MixedPoint]:
        return [MixedPoint.of(x, u) for x, u in zip(self.X, self.U)]

    def __len__(self) -> int:
        return self.X.shape[0]


def lhs_continuous(n: int, dim: int, seed) -> np.ndarray:
    """Random Latin hypercube sample of ``n`` points in ``[0, 1]^dim``.

    Each column holds exactly one point per interval ``[i/n, (i+1)/n)``.
    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if n < 1 or dim < 1:
        raise ValueError(f"need n >= 1 and dim >= 1, got n={n}, dim={dim}")
    rng = np.random.default_rng(seed)
    strata = np.argsort(rng.random((n, dim)), axis=0)
    return (strata + rng.random((n, dim))) / n


def balanced_levels(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` level indices in 1..m, each level used floor(n/m) or ceil(n/m) times."""
    cycle = rng.permutation(m) + 1
    col = np.resize(cycle, n)
    return rng.permutation(col)


def mixed_distances(X: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Condensed pairwise distances: Euclidean on x plus Hamming on u."""
    d = pdist(U, metric="hamming") * U.shape[1]
    if X.shape[1] > 0:
        d = d + pdist(X)
    return d


def maximin_lhs_mixed(problem: MixedProblem, n: int, seed, candidates: int = 50) -> Design:
    """Best of ``candidates`` random mixed LHS designs under the maximin criterion.

    Ties keep the earliest candidate.
    """
    if n < 2:
        raise ValueError(f"need at least 2 design points, got {n}")
    rng = np.random.default_rng(seed)
    best = None
    scores = []
    for _ in range(candidates):
        X = lhs_continuous(n, problem.n_c, rng) if problem.n_c > 0 else np.empty((n, 0))
        U = np.column_stack([balanced_levels(n, m, rng) for m in problem.levels])
        score = float(mixed_distances(X, U).min())
        scores.append(score)
        if best is None or score > best[2]:
            best = (X, U, score)
    X, U, score = best
    return Design(X, U.astype(int), seed if isinstance(seed, int) else -1, score, tuple(scores))
