"""Expected improvement, its log transform, the discreteness constraint and the pre-image."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.special import ndtr

from .gp import GpModel, LatentMap, all_level_combinations

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
EPSILON_INEQUALITY = 0.01


def ei_from_moments(mean, sd, y_min):
    """Closed-form EI of a Gaussian prediction; ``max(y_min - mean, 0)`` when sd < 1e-12."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    gap = y_min - mean
    safe = sd >= 1e-12
    s = np.where(safe, sd, 1.0)
    z = gap / s
    ei = gap * ndtr(z) + s * INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out = np.where(safe, np.maximum(ei, 0.0), np.maximum(gap, 0.0))
    return out if out.ndim else float(out)


class _Segment:
    """Relaxation along the segment between the two extreme images (1 coordinate used)."""

    def __init__(self, phi: np.ndarray):
        centered = phi - phi.mean(axis=0)
        direction = np.linalg.svd(centered, full_matrices=False)[2][0]
        proj = centered @ direction
        self.a, self.b = phi[int(np.argmin(proj))], phi[int(np.argmax(proj))]
        span = self.b - self.a
        denom = float(span @ span)
        s = (phi - self.a) @ span / denom if denom > 0 else np.zeros(phi.shape[0])
        self.coords = np.column_stack([s, np.zeros_like(s)])[:, :phi.shape[1]]
        self.lower = np.zeros(phi.shape[1])
        self.upper = np.ones(phi.shape[1])

    def to_latent(self, T):
        return self.a + T[:, :1] * (self.b - self.a)


class _Polygon:
    """Convex hull of planar images in polar coordinates ``(r, angle)`` about its centroid.

    ``r = 1`` is the hull boundary, so the box ``[0, 1] x [-pi, pi]`` covers
    exactly the hull.
    """

    def __init__(self, phi: np.ndarray):
        hull = ConvexHull(phi)
        self.normals = hull.equations[:, :2]
        self.offsets = hull.equations[:, 2]
        self.center = phi[hull.vertices].mean(axis=0)
        d = phi - self.center
        ang = np.arctan2(d[:, 1], d[:, 0])
        reach = self._reach(ang)
        r = np.where(reach > 0, np.sqrt(np.sum(d * d, axis=1)) / reach, 0.0)
        self.coords = np.column_stack([np.minimum(r, 1.0), ang])
        self.lower = np.array([0.0, -np.pi])
        self.upper = np.array([1.0, np.pi])

    def _reach(self, ang):
        """Distance from the centroid to the hull boundary along each angle."""
        d = np.column_stack([np.cos(ang), np.sin(ang)])
        nd = d @ self.normals.T
        slack = -(self.normals @ self.center + self.offsets)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(nd > 1e-15, slack / nd, np.inf)
        return t.min(axis=1)

    def to_latent(self, T):
        r, ang = T[:, 0], T[:, 1]
        d = np.column_stack([np.cos(ang), np.sin(ang)])
        return self.center + (r * self._reach(ang))[:, None] * d


def _relaxation(phi: np.ndarray):
    if phi.shape[1] == 2 and phi.shape[0] >= 3:
        try:
            return _Polygon(phi)
        except QhullError:
            pass
    return _Segment(phi)


class RelaxedSpace:
    """Box coordinates covering the convex hull of each variable's level images.

    The relaxed latent domain of a variable is the convex hull of its
    images. Because the posterior mean is linear and the posterior sd a
    norm in the latent coordinates of one variable, EI is convex in them and
    its maximum over the hull is reached at an image. Planar hulls are
    parameterized by polar coordinates about their centroid, degenerate ones
    by a segment. Coordinates equal to a level's own coordinates map to that
    level's stored image exactly, so image points stay exactly feasible.
    """

    def __init__(self, latent: LatentMap):
        self.latent = latent
        self.parts = [_relaxation(phi) for phi in latent.phi]
        self.lower = np.concatenate([p.lower for p in self.parts])
        self.upper = np.concatenate([p.upper for p in self.parts])
        self.slices, start = [], 0
        for p in self.parts:
            self.slices.append(slice(start, start + p.lower.size))
            start += p.lower.size

    @property
    def size(self) -> int:
        return self.lower.size

    def from_levels(self, U) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=int))
        return np.hstack([p.coords[U[:, j] - 1] for j, p in enumerate(self.parts)])

    def to_latent(self, T) -> np.ndarray:
        T = np.atleast_2d(np.asarray(T, dtype=float))
        out = []
        for sl, part, phi in zip(self.slices, self.parts, self.latent.phi):
            t = T[:, sl]
            L = part.to_latent(t)
            hit = np.all(t[:, None, :] == part.coords[None, :, :], axis=2)
            rows, lev = np.nonzero(hit)
            L[rows] = phi[lev]
            out.append(L)
        return np.hstack(out)


@dataclass(frozen=True)
class AcquisitionContext:
    model: GpModel
    y_min: float
    epsilon: float = 0.0
    latent_scale: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def build(cls, model: GpModel, epsilon: float = 0.0) -> "AcquisitionContext":
        scale = model.latent.scale() if model.latent is not None else None
        return cls(model, float(np.min(model.y)), epsilon, scale)

    @property
    def latent(self) -> LatentMap:
        return self.model.latent

    @property
    def n_c(self) -> int:
        return self.model.X.shape[1]

    @property
    def space(self) -> RelaxedSpace:
        return RelaxedSpace(self.latent)

    def bounds(self, space: Optional[RelaxedSpace] = None):
        """Search box of stacked ``[x, t]`` vectors, ``t`` being relaxed coordinates."""
        space = space or self.space
        return (np.concatenate([np.zeros(self.n_c), space.lower]),
                np.concatenate([np.ones(self.n_c), space.upper]))


def expected_improvement(ctx: AcquisitionContext, x, w):
    """EI at mixed points (integer ``w``) or relaxed latent points (float ``w``)."""
    w = np.asarray(w)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.issubdtype(w.dtype, np.integer):
        m, s = ctx.model.predict(x, np.atleast_2d(w))
    else:
        m, s = ctx.model.predict_latent(x, np.atleast_2d(w))
    return ei_from_moments(m, s, ctx.y_min)


def f_from_ei(ei):
    return -np.log1p(ei)


def f_t(ctx: AcquisitionContext, x, w):
    """``-log(1 + EI)``; non-positive and decreasing in EI."""
    return f_from_ei(expected_improvement(ctx, x, w))


def level_distances(ctx: AcquisitionContext, L) -> list[np.ndarray]:
    """Per variable, the scaled squared distance from each row of L to every level image."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    out = []
    for sl, phi in zip(ctx.latent.slices, ctx.latent.phi):
        sc = ctx.latent_scale[sl]
        d = (L[:, None, sl] - phi[None, :, :]) / sc
        out.append(np.sum(d * d, axis=-1))
    return out


def g_t(ctx: AcquisitionContext, L):
    """Scaled distance from relaxed latent points to the nearest level image, minus epsilon.

    The squared distance to a level combination is a sum over variables, so
    its minimum over all combinations is the sum of per-variable minima.
    """
    L = np.asarray(L, dtype=float)
    total = sum(d.min(axis=1) for d in level_distances(ctx, L))
    g = np.sqrt(total) - ctx.epsilon
    return g if L.ndim > 1 else float(g[0])


def preimage(ctx: AcquisitionContext, x) -> tuple[tuple[int, ...], np.ndarray]:
    """Level vector maximizing EI at fixed ``x`` by exhaustive enumeration.

    Ties go to the lexicographically smallest level vector. Returns the
    chosen levels and the EI of every enumerated combination.
    """
    combos = all_level_combinations(ctx.model.levels)
    X = np.repeat(np.atleast_2d(np.asarray(x, dtype=float)), combos.shape[0], axis=0)
    ei = expected_improvement(ctx, X, ctx.latent.images(combos))
    best = int(np.argmax(ei))
    return tuple(int(v) for v in combos[best]), ei
