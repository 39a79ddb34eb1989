"""Covariance functions on continuous, latent and categorical inputs.

Mixed kernels are products: a continuous stationary factor times one
categorical factor per discrete variable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

SQRT5 = np.sqrt(5.0)
FAMILIES = ("matern52", "sqexp")


class KernelParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ContinuousKernelParams:
    lengthscales: tuple[float, ...]
    variance: float = 1.0
    family: str = "matern52"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelParameterError(f"unknown kernel family {self.family!r}")
        if self.variance <= 0 or any(l <= 0 for l in self.lengthscales):
            raise KernelParameterError("lengthscales and variance must be positive")


@dataclass(frozen=True)
class CategoricalCovMatrix:
    """Covariance between the levels of one categorical variable."""

    T: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1] or not np.allclose(T, T.T):
            raise KernelParameterError("T must be a symmetric square matrix")
        object.__setattr__(self, "T", T)

    @classmethod
    def from_latent(cls, phi: np.ndarray) -> "CategoricalCovMatrix":
        phi = np.asarray(phi, dtype=float)
        return cls(phi @ phi.T)

    @property
    def m(self) -> int:
        return self.T.shape[0]

    def __call__(self, u: int, u2: int) -> float:
        _check_level(u, self.m)
        _check_level(u2, self.m)
        return float(self.T[u - 1, u2 - 1])


@dataclass(frozen=True)
class CompoundSymmetryParams:
    m: int
    variance: float = 1.0
    correlation: float = 0.0

    def __post_init__(self):
        if self.m < 2:
            raise KernelParameterError("compound symmetry needs m >= 2")
        lo = -1.0 / (self.m - 1)
        if self.variance <= 0 or not lo < self.correlation < 1.0:
            raise KernelParameterError(
                f"need variance > 0 and {lo:.4g} < correlation < 1, "
                f"got {self.variance}, {self.correlation}")

    @property
    def matrix(self) -> np.ndarray:
        c = self.correlation
        return self.variance * ((1.0 - c) * np.eye(self.m) + c * np.ones((self.m, self.m)))

    def __call__(self, u: int, u2: int) -> float:
        return compound_symmetry(u, u2, self)


DiscretePart = Union[CategoricalCovMatrix, CompoundSymmetryParams]


def _check_level(u, m):
    if not 1 <= int(u) <= m:
        raise KernelParameterError(f"level {u} outside 1..{m}")


def _scaled_r(x, x2, lengthscales):
    diff = (np.asarray(x, float) - np.asarray(x2, float)) / np.asarray(lengthscales, float)
    return float(np.sqrt(np.sum(diff ** 2)))


def matern52(x, x2, params: ContinuousKernelParams) -> float:
    r = _scaled_r(x, x2, params.lengthscales)
    return params.variance * (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * np.exp(-SQRT5 * r)


def sqexp(x, x2, params: ContinuousKernelParams) -> float:
    r = _scaled_r(x, x2, params.lengthscales)
    return params.variance * np.exp(-0.5 * r * r)


def continuous_kernel(x, x2, params: ContinuousKernelParams) -> float:
    return matern52(x, x2, params) if params.family == "matern52" else sqexp(x, x2, params)


def correlation_from_sqdist(sq: np.ndarray, family: str = "matern52") -> np.ndarray:
    """Unit-variance kernel value from summed squared scaled distances."""
    if family == "matern52":
        r = np.sqrt(np.maximum(sq, 0.0))
        return (1.0 + SQRT5 * r + (5.0 / 3.0) * sq) * np.exp(-SQRT5 * r)
    return np.exp(-0.5 * sq)


def continuous_correlation(X1: np.ndarray, X2: np.ndarray, lengthscales,
                           family: str = "matern52") -> np.ndarray:
    """Matrix of unit-variance continuous kernel values between rows of X1 and X2."""
    X1 = np.atleast_2d(X1) / lengthscales
    X2 = np.atleast_2d(X2) / lengthscales
    sq = np.sum((X1[:, None, :] - X2[None, :, :]) ** 2, axis=-1)
    return correlation_from_sqdist(sq, family)


def dot_latent(a, b) -> float:
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"latent vectors differ in length: {a.shape[0]} vs {b.shape[0]}")
    return float(a @ b)


def compound_symmetry(u: int, u2: int, params: CompoundSymmetryParams) -> float:
    _check_level(u, params.m)
    _check_level(u2, params.m)
    return params.variance if u == u2 else params.variance * params.correlation


def discrete_matrix(part: DiscretePart) -> np.ndarray:
    return part.T if isinstance(part, CategoricalCovMatrix) else part.matrix


def product_mixed_kernel(p, p2, cont_params: ContinuousKernelParams,
                         disc_parts: Sequence[DiscretePart]) -> float:
    """Product of the continuous kernel and every categorical factor.

    ``p`` and ``p2`` are ``MixedPoint``-like objects with ``x`` and ``u``.
    """
    if len(p.u) != len(disc_parts) or len(p2.u) != len(disc_parts):
        raise ValueError("one discrete kernel per categorical variable is required")
    k = continuous_kernel(p.x, p2.x, cont_params) if len(p.x) else cont_params.variance
    for uj, vj, part in zip(p.u, p2.u, disc_parts):
        k *= part(uj, vj)
    return float(k)


def mixed_gram(X: np.ndarray, U: np.ndarray, cont_params: ContinuousKernelParams,
               disc_parts: Sequence[DiscretePart]) -> np.ndarray:
    """Gram matrix of ``product_mixed_kernel`` over the rows of (X, U)."""
    U = np.asarray(U, dtype=int)
    if X.shape[1]:
        K = cont_params.variance * continuous_correlation(
            X, X, np.asarray(cont_params.lengthscales), cont_params.family)
    else:
        K = np.full((U.shape[0], U.shape[0]), cont_params.variance)
    for j, part in enumerate(disc_parts):
        T = discrete_matrix(part)
        K = K * T[np.ix_(U[:, j] - 1, U[:, j] - 1)]
    return K
