import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvego.kernels import (CategoricalCovMatrix, CompoundSymmetryParams, ContinuousKernelParams,
                           KernelParameterError, compound_symmetry, dot_latent, matern52,
                           mixed_gram, product_mixed_kernel, sqexp)
from lvego.problems import MixedPoint

MATERN_AT_UNIT_DISTANCE = 0.523994108832  # hand evaluation of the closed form


def test_matern_values():
    p = ContinuousKernelParams((1.0,), 1.0)
    assert matern52([0.0], [1.0], p) == pytest.approx(MATERN_AT_UNIT_DISTANCE, abs=1e-12)
    q = ContinuousKernelParams((0.3, 2.0), 2.5)
    assert matern52([0.2, 0.7], [0.2, 0.7], q) == 2.5
    assert sqexp([0.2, 0.7], [0.2, 0.7], q) == 2.5


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=2),
       st.lists(st.floats(0, 1), min_size=2, max_size=2),
       st.floats(0.01, 10), st.floats(0.01, 10))
def test_matern_symmetry_and_bounds(a, b, l1, l2):
    p = ContinuousKernelParams((l1, l2), 1.3)
    k = matern52(a, b, p)
    assert k == pytest.approx(matern52(b, a, p), rel=1e-14)
    assert 0 <= k <= 1.3 + 1e-12


@pytest.mark.parametrize("kw", [dict(lengthscales=(0.0,)), dict(lengthscales=(1.0,), variance=-1),
                                dict(lengthscales=(1.0,), family="cubic")])
def test_bad_continuous_params(kw):
    with pytest.raises(KernelParameterError):
        ContinuousKernelParams(**kw)


def test_dot_latent():
    assert dot_latent([0, 0], [3.2, -1]) == 0
    assert dot_latent([1, 2], [3, 4]) == 11
    with pytest.raises(ValueError):
        dot_latent([1, 2], [1, 2, 3])


def test_dot_latent_gram_low_rank():
    phi = np.random.default_rng(0).normal(size=(5, 2))
    G = np.array([[dot_latent(a, b) for b in phi] for a in phi])
    s = np.linalg.svd(G, compute_uv=False)
    assert np.sum(s > 1e-10 * s[0]) <= 2


def test_compound_symmetry():
    assert compound_symmetry(2, 2, CompoundSymmetryParams(3, 2.0, 0.1)) == 2.0
    assert compound_symmetry(1, 3, CompoundSymmetryParams(3, 1.0, 0.3)) == pytest.approx(0.3)
    T = CompoundSymmetryParams(3, 1.0, -0.49).matrix
    assert np.linalg.eigvalsh(T).min() >= 0
    with pytest.raises(KernelParameterError):
        CompoundSymmetryParams(3, 1.0, -0.5)
    with pytest.raises(KernelParameterError):
        compound_symmetry(4, 1, CompoundSymmetryParams(3, 1.0, 0.0))


def test_categorical_cov_matrix():
    with pytest.raises(KernelParameterError):
        CategoricalCovMatrix(np.array([[1.0, 0.2], [0.3, 1.0]]))
    T = CategoricalCovMatrix.from_latent(np.array([[1.0, 0.0], [0.6, 0.8]]))
    assert T(1, 2) == pytest.approx(0.6)


def _random_parts(rng, levels):
    parts = []
    for j, m in enumerate(levels):
        if j % 2 == 0:
            parts.append(CategoricalCovMatrix.from_latent(rng.normal(size=(m, 2))))
        else:
            lo = -1.0 / (m - 1)
            parts.append(CompoundSymmetryParams(m, rng.uniform(0.5, 2), rng.uniform(lo + 1e-3, 0.99)))
    return parts


def test_product_kernel_identities():
    rng = np.random.default_rng(1)
    cont = ContinuousKernelParams((0.4, 0.7), 1.7)
    cs = [CompoundSymmetryParams(3, 2.0, 0.2), CompoundSymmetryParams(4, 0.5, 0.1)]
    p = MixedPoint.of([0.3, 0.6], [2, 4])
    assert product_mixed_kernel(p, p, cont, cs) == pytest.approx(1.7 * 2.0 * 0.5)
    zero = [CategoricalCovMatrix(np.zeros((3, 3))), cs[1]]
    q = MixedPoint.of(rng.random(2), [1, 2])
    assert product_mixed_kernel(p, q, cont, zero) == 0.0


def test_gram_matches_pointwise_and_is_psd():
    rng = np.random.default_rng(2)
    levels = (4, 3)
    for _ in range(100):
        n = int(rng.integers(2, 31))
        X = rng.random((n, 2))
        U = np.column_stack([rng.integers(1, m + 1, n) for m in levels])
        cont = ContinuousKernelParams(tuple(rng.uniform(0.05, 2, 2)), rng.uniform(0.5, 2),
                                      family="matern52" if rng.random() < 0.5 else "sqexp")
        parts = _random_parts(rng, levels)
        K = mixed_gram(X, U, cont, parts)
        assert np.allclose(K, K.T)
        assert np.linalg.eigvalsh(K).min() >= -1e-8 * np.trace(K)
    pts = [MixedPoint.of(x, u) for x, u in zip(X[:5], U[:5])]
    K5 = np.array([[product_mixed_kernel(a, b, cont, parts) for b in pts] for a in pts])
    assert np.allclose(K5, K[:5, :5], rtol=1e-12, atol=1e-14)


def test_product_kernel_arity_check():
    cont = ContinuousKernelParams((0.4,), 1.0)
    p = MixedPoint.of([0.1], [1, 1])
    with pytest.raises(ValueError):
        product_mixed_kernel(p, p, cont, [CompoundSymmetryParams(2)])
