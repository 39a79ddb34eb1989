"""Gaussian processes on mixed inputs.

Two categorical treatments are supported:

* ``"latent"``: each categorical variable j is mapped to points
  ``phi_j(level)`` in R^{q_j}; its kernel factor is the dot product of the
  images, so the level covariance matrix is ``Phi_j Phi_j^T`` (rank <= q_j).
* ``"compound"``: compound-symmetry factor with one shared correlation.

The continuous factor is an anisotropic Matern 5/2 (or squared exponential),
and the trend is a constant. Outputs are standardized before fitting.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotrf, dtrtrs

from .kernels import CategoricalCovMatrix, correlation_from_sqdist
from .optimizers import LocalSearchConfig, OptimizerError, local_minimize

LOG_2PI = np.log(2.0 * np.pi)
LENGTHSCALE_BOUNDS = (1e-3, 1e3)
LATENT_BOUND = 10.0
NUGGET = 1e-8
MAX_NUGGET = 1e-4
INTERPOLATION_TOL = 1e-4  # max training misfit accepted by the MLE, in output sd
NON_INTERPOLATING_OFFSET = 1e6
MLE_CONFIG = LocalSearchConfig(restarts=5, max_evals_per_restart=600,
                               initial_step=0.25, tol=1e-6, method="compass", screen=1000)


class IllConditionedModel(np.linalg.LinAlgError):
    pass


class FitError(RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class UnsupportedMode(ValueError):
    pass


def latent_dim(m: int) -> int:
    return 1 if m <= 3 else 2


# ---------------------------------------------------------------------------
# Latent maps

@dataclass(frozen=True)
class LatentMap:
    """Images of every level of every categorical variable.

    ``phi[j]`` has shape ``(m_j, q_j)``; row k-1 is the image of level k.
    """

    phi: tuple

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(np.asarray(p, dtype=float) for p in self.phi))

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(p.shape[0] for p in self.phi)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(p.shape[1] for p in self.phi)

    @property
    def n_latent(self) -> int:
        return int(sum(self.dims))

    @property
    def slices(self) -> list[slice]:
        out, start = [], 0
        for q in self.dims:
            out.append(slice(start, start + q))
            start += q
        return out

    def image(self, u: Sequence[int]) -> np.ndarray:
        return np.concatenate([p[int(k) - 1] for p, k in zip(self.phi, u)])

    def images(self, U: np.ndarray) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=int))
        return np.hstack([p[U[:, j] - 1] for j, p in enumerate(self.phi)])

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned hull of the level images; the relaxed search box."""
        lo = np.concatenate([p.min(axis=0) for p in self.phi])
        hi = np.concatenate([p.max(axis=0) for p in self.phi])
        return lo, hi

    def scale(self, floor: float = 1e-8) -> np.ndarray:
        lo, hi = self.box()
        return np.maximum(hi - lo, floor)

    def covariance(self, j: int) -> CategoricalCovMatrix:
        return CategoricalCovMatrix.from_latent(self.phi[j])

    def rotated(self, angles: Sequence[float]) -> "LatentMap":
        out = []
        for p, a in zip(self.phi, angles):
            if p.shape[1] == 2:
                c, s = np.cos(a), np.sin(a)
                p = p @ np.array([[c, -s], [s, c]])
            out.append(p)
        return LatentMap(tuple(out))

    def digest(self) -> str:
        h = hashlib.sha1()
        for p in self.phi:
            h.update(np.ascontiguousarray(p).tobytes())
        return h.hexdigest()[:16]

    def to_list(self) -> list:
        return [p.tolist() for p in self.phi]

    @classmethod
    def from_list(cls, data) -> "LatentMap":
        return cls(tuple(np.asarray(p, dtype=float) for p in data))


def _latent_from_free(levels: Sequence[int], theta: np.ndarray) -> LatentMap:
    """Unpack free latent parameters under the gauge used by ``fit``.

    Two-dimensional images lie on the unit circle and are given by angles, so
    every level has the same prior variance and the process variance carries
    the scale. The dot product is unchanged by rotations and reflections, so
    level 1 sits at angle 0 and level 2 at an angle in ``[0, pi]``.
    One-dimensional images are free scalars with level 1 pinned to 1.
    """
    out, k = [], 0
    for m in levels:
        n = m - 1
        free = theta[k:k + n]
        if latent_dim(m) == 2:
            ang = np.concatenate([[0.0], free])
            out.append(np.column_stack([np.cos(ang), np.sin(ang)]))
        else:
            out.append(np.concatenate([[1.0], free])[:, None])
        k += n
    return LatentMap(tuple(out))


def _latent_to_free(latent: LatentMap) -> np.ndarray:
    parts = []
    for phi in latent.phi:
        if phi.shape[1] == 2:
            parts.append(np.arctan2(phi[1:, 1], phi[1:, 0]))
        else:
            parts.append(phi[1:, 0])
    return np.concatenate(parts) if parts else np.empty(0)


def _latent_free_bounds(levels: Sequence[int]):
    lo, hi = [], []
    for m in levels:
        for k in range(m - 1):
            if latent_dim(m) == 2:
                lo.append(0.0 if k == 0 else -np.pi)
                hi.append(np.pi)
            else:
                lo.append(-LATENT_BOUND)
                hi.append(LATENT_BOUND)
    return np.array(lo), np.array(hi)


def latent_correlation(phi: np.ndarray) -> np.ndarray:
    """Correlation matrix of the dot-product kernel on the rows of ``phi``.

    Rows with zero norm stay zero.
    """
    T = np.asarray(phi, float) @ np.asarray(phi, float).T
    d = np.sqrt(np.clip(np.diag(T), 0.0, None))
    nz = d > 0
    C = np.zeros_like(T)
    C[np.ix_(nz, nz)] = T[np.ix_(nz, nz)] / np.outer(d[nz], d[nz])
    return C


# ---------------------------------------------------------------------------
# Parameters and likelihood

@dataclass(frozen=True)
class GpParams:
    """Full hyperparameter set.

    ``latent`` is used in latent mode, ``cs_correlation`` (one value per
    categorical variable, unit level variance) in compound mode.
    """

    lengthscales: tuple[float, ...]
    variance: float
    mean: float = 0.0
    latent: Optional[LatentMap] = None
    cs_correlation: Optional[tuple[float, ...]] = None
    family: str = "matern52"

    @property
    def mode(self) -> str:
        return "latent" if self.latent is not None else "compound"

    def level_matrices(self, levels: Sequence[int]) -> list[np.ndarray]:
        if self.latent is not None:
            return [p @ p.T for p in self.latent.phi]
        out = []
        for m, c in zip(levels, self.cs_correlation):
            out.append((1.0 - c) * np.eye(m) + c * np.ones((m, m)))
        return out

    def to_dict(self) -> dict:
        d = {"lengthscales": list(self.lengthscales), "variance": self.variance,
             "mean": self.mean, "family": self.family}
        if self.latent is not None:
            d["latent"] = self.latent.to_list()
        if self.cs_correlation is not None:
            d["cs_correlation"] = list(self.cs_correlation)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GpParams":
        return cls(tuple(d["lengthscales"]), d["variance"], d.get("mean", 0.0),
                   LatentMap.from_list(d["latent"]) if "latent" in d else None,
                   tuple(d["cs_correlation"]) if "cs_correlation" in d else None,
                   d.get("family", "matern52"))


class _Design:
    """Training inputs with precomputed pairwise pieces for fast Gram assembly."""

    def __init__(self, X, U, levels):
        self.X = np.asarray(X, dtype=float).reshape(len(U), -1)
        self.U = np.asarray(U, dtype=int).reshape(len(U), -1)
        self.levels = tuple(int(m) for m in levels)
        t = self.t = self.U.shape[0]
        diff = self.X[:, None, :] - self.X[None, :, :]
        self.sqdiff = np.ascontiguousarray((diff ** 2).reshape(t * t, -1))
        self.flat_pairs = []
        for j, m in enumerate(self.levels):
            idx = self.U[:, j] - 1
            self.flat_pairs.append((idx[:, None] * m + idx[None, :]).ravel())

    def unit_gram(self, lengthscales, level_mats, family) -> np.ndarray:
        t = self.t
        if self.X.shape[1]:
            sq = self.sqdiff @ (1.0 / np.asarray(lengthscales, dtype=float) ** 2)
            R = correlation_from_sqdist(sq, family)
        else:
            R = np.ones(t * t)
        for flat, T in zip(self.flat_pairs, level_mats):
            R *= np.ravel(T)[flat]
        return R.reshape(t, t)


def _cholesky(K: np.ndarray, scale: float, nugget: float = NUGGET):
    """Cholesky of ``K + tau * scale * I`` escalating ``tau`` by 10 up to 1e-4."""
    tau = nugget
    n = K.shape[0]
    while tau <= MAX_NUGGET * (1 + 1e-12):
        L, info = dpotrf(K + (tau * scale) * np.eye(n), lower=1, clean=1)
        if info == 0:
            return L, tau
        tau *= 10.0
    raise IllConditionedModel(f"Gram matrix not positive definite with nugget {MAX_NUGGET}")


def neg_log_likelihood(params: GpParams, X, U, y, levels=None) -> float:
    """Gaussian negative log-likelihood with jitter ``1e-8 * variance``.

    ``0.5 r^T K^-1 r + 0.5 log|K| + (t/2) log 2 pi`` with ``r = y - mean``.
    """
    U = np.asarray(U, dtype=int).reshape(len(y), -1)
    if levels is None:
        levels = params.latent.levels if params.latent is not None else tuple(U.max(axis=0))
    D = _Design(X, U, levels)
    y = np.asarray(y, dtype=float)
    K = params.variance * D.unit_gram(params.lengthscales, params.level_matrices(levels),
                                      params.family)
    L, _ = _cholesky(K, params.variance)
    r = y - params.mean
    a = solve_triangular(L, r, lower=True)
    return float(0.5 * a @ a + np.sum(np.log(np.diag(L))) + 0.5 * D.t * LOG_2PI)


def _profiled(R: np.ndarray, y: np.ndarray):
    """Mean, variance and NLL with the mean and variance at their MLE.

    Also returns the jitter used and the largest training misfit of the
    resulting posterior mean, which equals ``tau * |(R + tau I)^-1 (y - mean)|``.
    """
    t = y.size
    L, tau = _cholesky(R, 1.0)
    a, _ = dtrtrs(L, np.column_stack([np.ones(t), y]), lower=1)
    a1, ay = a[:, 0], a[:, 1]
    mean = float(a1 @ ay / (a1 @ a1))
    r = ay - mean * a1
    var = max(float(r @ r) / t, 1e-300)
    nll = 0.5 * t * np.log(var) + np.sum(np.log(np.diag(L))) + 0.5 * t * (1.0 + LOG_2PI)
    alpha, _ = dtrtrs(L, r, lower=1, trans=1)
    misfit = tau * float(np.max(np.abs(alpha)))
    return mean, var, float(nll), tau, misfit


# ---------------------------------------------------------------------------
# Trained model

@dataclass(frozen=True)
class GpModel:
    params: GpParams
    X: np.ndarray
    U: np.ndarray
    y: np.ndarray
    levels: tuple[int, ...]
    y_mean: float
    y_sd: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    nugget: float = NUGGET
    nll: float = np.nan
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def mode(self) -> str:
        return self.params.mode

    @property
    def latent(self) -> Optional[LatentMap]:
        return self.params.latent

    @property
    def ys(self) -> np.ndarray:
        return (self.y - self.y_mean) / self.y_sd

    @classmethod
    def condition(cls, X, U, y, params: GpParams, levels, nll=np.nan,
                  diagnostics=None, standardize: bool = True) -> "GpModel":
        """Condition a GP with fixed ``params`` (on the standardized scale) on data."""
        y = np.asarray(y, dtype=float)
        D = _Design(X, U, levels)
        if standardize:
            y_mean = float(np.mean(y))
            y_sd = float(np.std(y))
            if not y_sd > 0:
                y_sd = 1.0
        else:
            y_mean, y_sd = 0.0, 1.0
        ys = (y - y_mean) / y_sd
        K = params.variance * D.unit_gram(params.lengthscales,
                                          params.level_matrices(D.levels), params.family)
        L, tau = _cholesky(K, params.variance)
        alpha = cho_solve((L, True), ys - params.mean)
        return cls(params, D.X, D.U, y, D.levels, y_mean, y_sd, L, alpha, tau, nll,
                   diagnostics or {})

    # -- prediction ---------------------------------------------------------

    def _cross_latent(self, Xq, Lq):
        p = self.params
        if self.X.shape[1]:
            sq = np.sum(((Xq[:, None, :] - self.X[None, :, :]) / np.asarray(p.lengthscales)) ** 2,
                        axis=-1)
            k = correlation_from_sqdist(sq, p.family)
        else:
            k = np.ones((Xq.shape[0], self.X.shape[0]))
        prior = np.ones(Xq.shape[0])
        for j, (sl, phi) in enumerate(zip(p.latent.slices, p.latent.phi)):
            lq = Lq[:, sl]
            k = k * (lq @ phi[self.U[:, j] - 1].T)
            prior = prior * np.sum(lq * lq, axis=1)
        return p.variance * k, p.variance * prior

    def _cross_mixed(self, Xq, Uq):
        p = self.params
        if p.latent is not None:
            return self._cross_latent(Xq, p.latent.images(Uq))
        if self.X.shape[1]:
            sq = np.sum(((Xq[:, None, :] - self.X[None, :, :]) / np.asarray(p.lengthscales)) ** 2,
                        axis=-1)
            k = correlation_from_sqdist(sq, p.family)
        else:
            k = np.ones((Xq.shape[0], self.X.shape[0]))
        for j, T in enumerate(p.level_matrices(self.levels)):
            k = k * T[Uq[:, j][:, None] - 1, self.U[:, j][None, :] - 1]
        prior = np.full(Xq.shape[0], p.variance)
        return p.variance * k, prior

    def _finish(self, k, prior):
        mean = self.params.mean + k @ self.alpha
        v = solve_triangular(self.chol, k.T, lower=True, check_finite=False)
        var = np.clip(prior - np.sum(v * v, axis=0), 0.0, None)
        return self.y_mean + self.y_sd * mean, self.y_sd * np.sqrt(var)

    def predict_latent(self, Xq, Lq):
        """Posterior mean and sd at relaxed latent points (latent mode only)."""
        if self.params.latent is None:
            raise UnsupportedMode("relaxed latent prediction needs a latent-mode model")
        Xq = np.asarray(Xq, dtype=float).reshape(-1, self.X.shape[1])
        Lq = np.asarray(Lq, dtype=float).reshape(Xq.shape[0], -1)
        return self._finish(*self._cross_latent(Xq, Lq))

    def predict(self, Xq, Uq):
        """Posterior mean and sd at mixed points."""
        Xq = np.asarray(Xq, dtype=float).reshape(-1, self.X.shape[1])
        Uq = np.asarray(Uq, dtype=int).reshape(Xq.shape[0], -1)
        return self._finish(*self._cross_mixed(Xq, Uq))

    def to_dict(self) -> dict:
        return {"mode": self.mode, "params": self.params.to_dict(),
                "y_mean": self.y_mean, "y_sd": self.y_sd, "nugget": self.nugget,
                "nll": self.nll}


def posterior(model: GpModel, x, w) -> tuple[float, float]:
    """Mean and sd at one point; ``w`` is a level vector (ints) or latent coordinates."""
    w = np.asarray(w)
    if np.issubdtype(w.dtype, np.integer):
        m, s = model.predict(np.atleast_2d(x), np.atleast_2d(w))
    else:
        m, s = model.predict_latent(np.atleast_2d(x), np.atleast_2d(w))
    return float(m[0]), float(s[0])


def extract_correlation(model: GpModel, j: int) -> CategoricalCovMatrix:
    if model.params.latent is None:
        raise UnsupportedMode("correlation extraction needs a latent-mode model")
    return CategoricalCovMatrix(latent_correlation(model.params.latent.phi[j]))


# ---------------------------------------------------------------------------
# Maximum likelihood

class _Parameterization:
    """Map between a flat search vector and ``GpParams`` (variance and mean profiled)."""

    def __init__(self, n_c, levels, mode, family):
        self.n_c, self.levels, self.mode, self.family = n_c, tuple(levels), mode, family
        lo = [np.log(LENGTHSCALE_BOUNDS[0])] * n_c
        hi = [np.log(LENGTHSCALE_BOUNDS[1])] * n_c
        slo = [np.log(0.05)] * n_c
        shi = [np.log(1.0)] * n_c
        if mode == "latent":
            llo, lhi = _latent_free_bounds(levels)
            lo += list(llo)
            hi += list(lhi)
            angle = lhi <= np.pi
            slo += list(np.where(angle, llo, -1.5))
            shi += list(np.where(angle, lhi, 1.5))
        elif mode == "compound":
            for m in levels:
                c_lo = -1.0 / (m - 1) + 1e-3
                lo.append(c_lo)
                hi.append(1.0 - 1e-3)
                slo.append(max(c_lo, -0.1))
                shi.append(0.9)
        else:
            raise ValueError(f"unknown GP mode {mode!r}")
        self.lower, self.upper = np.array(lo), np.array(hi)
        self.start_lower, self.start_upper = np.array(slo), np.array(shi)

    def level_mats(self, theta):
        rest = theta[self.n_c:]
        if self.mode == "latent":
            return [p @ p.T for p in _latent_from_free(self.levels, rest).phi]
        return [(1.0 - c) * np.eye(m) + c * np.ones((m, m)) for m, c in zip(self.levels, rest)]

    def to_params(self, theta, variance, mean) -> GpParams:
        ls = tuple(float(v) for v in np.exp(theta[:self.n_c]))
        rest = theta[self.n_c:]
        if self.mode == "latent":
            return GpParams(ls, variance, mean, latent=_latent_from_free(self.levels, rest),
                            family=self.family)
        return GpParams(ls, variance, mean, cs_correlation=tuple(float(c) for c in rest),
                        family=self.family)

    def from_params(self, p: GpParams) -> Optional[np.ndarray]:
        if p.mode != self.mode or len(p.lengthscales) != self.n_c:
            return None
        head = list(np.log(p.lengthscales))
        if self.mode == "latent":
            if p.latent.levels != self.levels:
                return None
            tail = _latent_to_free(p.latent)
        else:
            tail = np.asarray(p.cs_correlation)
        return np.clip(np.concatenate([head, tail]), self.lower, self.upper)


def fit(X, U, y, levels, mode: str = "latent", seed=None, warm_start: Optional[GpParams] = None,
        family: str = "matern52", config: LocalSearchConfig = MLE_CONFIG) -> GpModel:
    """Maximum-likelihood GP fit with a restarted derivative-free search.

    Process variance and constant mean are set to their closed-form optima for
    each candidate of the remaining parameters, so the search runs over log
    lengthscales plus latent coordinates (or compound-symmetry correlations).
    The first restart starts from ``warm_start`` when given. Parameters
    whose jittered model misses the training outputs by more than
    ``INTERPOLATION_TOL`` (standardized) are only used when no candidate
    interpolates.
    """
    y = np.asarray(y, dtype=float)
    D = _Design(X, U, levels)
    par = _Parameterization(D.X.shape[1], D.levels, mode, family)
    n_params = par.lower.size + 2
    if D.t < n_params + 2:
        raise FitError(f"need at least {n_params + 2} points, got {D.t}")
    y_mean = float(np.mean(y))
    y_sd = float(np.std(y)) or 1.0
    ys = (y - y_mean) / y_sd

    def objective(theta):
        R = D.unit_gram(np.exp(theta[:par.n_c]), par.level_mats(theta), family)
        try:
            _, _, nll, tau, misfit = _profiled(R, ys)
        except np.linalg.LinAlgError:
            return 1e10
        # Near-singular Gram matrices make the jittered model a smoother that
        # misses its data, which the likelihood would otherwise reward. Such
        # fits rank after every interpolating one but remain a fallback (a
        # rank-q latent map cannot interpolate q+1 levels at the same x).
        if tau <= NUGGET and misfit <= INTERPOLATION_TOL:
            return nll
        return NON_INTERPOLATING_OFFSET + nll

    starts = []
    if warm_start is not None:
        w = par.from_params(warm_start)
        if w is not None:
            starts.append(w)
    try:
        res = local_minimize(objective, par.lower, par.upper, config, seed, starts=starts,
                             start_lower=par.start_lower, start_upper=par.start_upper)
    except OptimizerError as exc:
        raise FitError(str(exc), {"t": D.t, "mode": mode}) from exc
    if res.fun >= 1e10:
        raise FitError("no restart reached a factorizable Gram matrix", {"t": D.t})
    theta = res.x
    R = D.unit_gram(np.exp(theta[:par.n_c]), par.level_mats(theta), family)
    mean, var, nll, _, misfit = _profiled(R, ys)
    params = par.to_params(theta, var, mean)
    diag = {"n_evals": res.n_evals, "start_values": res.start_values.tolist(),
            "aborted": res.aborted, "interpolates": res.fun < NON_INTERPOLATING_OFFSET / 2,
            "misfit": misfit}
    return GpModel.condition(D.X, D.U, y, params, D.levels, nll=nll, diagnostics=diag)


def random_params(levels, n_c, mode, rng, family="matern52") -> GpParams:
    """A random valid parameter vector (used for probing the likelihood)."""
    par = _Parameterization(n_c, levels, mode, family)
    theta = par.start_lower + (par.start_upper - par.start_lower) * rng.random(par.lower.size)
    return par.to_params(theta, float(np.exp(rng.uniform(-1, 1))), float(rng.normal()))


def all_level_combinations(levels: Sequence[int]) -> np.ndarray:
    """Every level vector in lexicographic order, shape ``(prod m_j, n_d)``."""
    return np.array(list(itertools.product(*[range(1, m + 1) for m in levels])), dtype=int)
