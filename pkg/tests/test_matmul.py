import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from randla import RandLAError, RngSeed
from randla.matmul import (approx_multiply, expected_sq_error, gram_sketch, matmul_probs,
                           quality_factor, spectral_sample_size)


def test_probs_examples():
    assert np.allclose(matmul_probs(np.eye(2), np.eye(2), "optimal"), [0.5, 0.5])
    assert np.allclose(matmul_probs(np.array([[1.0, 0], [0, 2]]), mode="from_a_squared"), [0.2, 0.8])
    A = np.array([[1.0, 0.0, 3.0], [2.0, 0.0, 1.0]])
    B = np.ones((3, 2))
    for mode in ("optimal", "from_a", "from_a_squared"):
        assert matmul_probs(A, B, mode)[1] == 0.0
    assert np.allclose(matmul_probs(A, B, "uniform"), 1 / 3)


def test_probs_errors():
    with pytest.raises(RandLAError, match="degenerate probabilities"):
        matmul_probs(np.zeros((2, 2)), np.eye(2))
    with pytest.raises(RandLAError, match="degenerate probabilities"):
        matmul_probs(np.eye(2), np.zeros((2, 2)))
    with pytest.raises(RandLAError):
        matmul_probs(np.eye(2), np.eye(3))
    with pytest.raises(RandLAError):
        matmul_probs(np.eye(2))
    with pytest.raises(RandLAError):
        matmul_probs(np.eye(2), np.eye(2), "bogus")


def test_single_nonzero_column_is_exact():
    g = np.random.default_rng(0)
    A = np.zeros((4, 5))
    A[:, 2] = g.standard_normal(4)
    B = g.standard_normal((5, 3))
    p = matmul_probs(A, B, "optimal")
    for c in (1, 3, 7):
        s = approx_multiply(A, B, c, p, c)
        assert np.allclose(s.product(), A @ B)
        assert s.beta == 1.0


def test_estimator_shapes_and_support():
    g = np.random.default_rng(1)
    A, B = g.standard_normal((6, 5)), g.standard_normal((5, 4))
    s = approx_multiply(A, B, 3, matmul_probs(A, B, "uniform"), 2)
    assert s.C.shape == (6, 3) and s.R.shape == (3, 4)
    scale = 1 / np.sqrt(3 * 0.2)
    assert np.allclose(s.C, A[:, s.indices] * scale)
    assert np.allclose(s.R, B[s.indices] * scale)
    assert s.beta <= 1


def test_approx_multiply_errors():
    A = np.eye(3)
    with pytest.raises(RandLAError):
        approx_multiply(A, A, 0, np.full(3, 1 / 3))
    with pytest.raises(RandLAError):
        approx_multiply(A, np.eye(2), 1, np.full(3, 1 / 3))
    with pytest.raises(RandLAError, match="biased"):
        approx_multiply(A, A, 1, [0.5, 0.5, 0.0])


def test_entry_mean_small_case():
    g = np.random.default_rng(2)
    A, B = g.standard_normal((2, 3)), g.standard_normal((3, 2))
    p = matmul_probs(A, B, "optimal")
    T, c = 20_000, 2
    vals = np.array([approx_multiply(A, B, c, p, RngSeed(3, t)).product()[0, 1] for t in range(T)])
    assert abs(vals.mean() - (A @ B)[0, 1]) <= 3 * vals.std(ddof=1) / math.sqrt(T)


def test_variance_identity():
    g = np.random.default_rng(4)
    A, B = g.standard_normal((5, 6)), g.standard_normal((6, 4))
    p = matmul_probs(A, B, "from_a_squared")
    T, c = 20_000, 3
    est = np.array([approx_multiply(A, B, c, p, RngSeed(5, t)).product() for t in range(T)])
    AB = A @ B
    var = ((A**2 / p) @ B**2 - AB**2) / c
    assert np.max(np.abs(est.var(axis=0, ddof=1) / var - 1)) <= 0.05


def test_closed_form_matches_monte_carlo():
    g = np.random.default_rng(6)
    A, B = g.standard_normal((10, 8)), g.standard_normal((8, 6))
    p = matmul_probs(A, B, "optimal")
    c = 4
    errs = [np.linalg.norm(A @ B - approx_multiply(A, B, c, p, RngSeed(7, t)).product()) ** 2
            for t in range(20_000)]
    w = np.linalg.norm(A, axis=0) * np.linalg.norm(B, axis=1)
    oracle = (w.sum() ** 2 - np.linalg.norm(A @ B) ** 2) / c
    assert expected_sq_error(A, B, p, c) == pytest.approx(oracle, rel=1e-12)
    assert abs(np.mean(errs) / oracle - 1) <= 0.03


def test_optimal_beats_uniform_dominant_column():
    g = np.random.default_rng(8)
    A, B = g.standard_normal((20, 10)), g.standard_normal((10, 5))
    A[:, 0] *= 100 * np.linalg.norm(A[:, 1:], axis=0).mean() / np.linalg.norm(A[:, 0])
    AB = A @ B
    eo, eu = [], []
    for t in range(2000):
        eo.append(np.linalg.norm(AB - approx_multiply(A, B, 3, matmul_probs(A, B, "optimal"),
                                                      RngSeed(8, t)).product()) ** 2)
        eu.append(np.linalg.norm(AB - approx_multiply(A, B, 3, matmul_probs(A, B, "uniform"),
                                                      RngSeed(9, t)).product()) ** 2)
    eo, eu = np.array(eo), np.array(eu)
    se = math.sqrt(eo.var() / eo.size + eu.var() / eu.size)
    assert eu.mean() - eo.mean() > 3 * se


def test_quality_factor():
    A, B = np.diag([1.0, 3.0]), np.eye(2)
    assert quality_factor(A, B, np.array([0.25, 0.75])) == pytest.approx(1.0)
    assert quality_factor(A, B, np.array([0.5, 0.5])) == pytest.approx(2 / 3)


def test_gram_sketch():
    # equal-norm orthogonal columns, uniform probs, c = n
    A = 2.0 * np.eye(6)[:, :4]
    p = np.full(4, 0.25)
    acc = np.zeros((6, 6))
    T = 10_000
    samples = []
    for t in range(T):
        C = gram_sketch(A, 4, p, RngSeed(10, t))
        G = C @ C.T
        assert np.allclose(G, G.T)
        acc += G
        samples.append(G[0, 0])
    sd = np.std(samples) / math.sqrt(T)
    assert abs(acc[0, 0] / T - 4.0) <= 3 * sd
    assert np.max(np.abs(acc / T - A @ A.T)) <= 3 * sd
    # rank one is exact
    u = np.arange(1.0, 5)[:, None] @ np.array([[1.0, -2.0, 0.5]])
    C = gram_sketch(u, 2, matmul_probs(u, mode="from_a_squared"), 0)
    assert np.allclose(C @ C.T, u @ u.T)
    with pytest.raises(RandLAError):
        gram_sketch(np.zeros((3, 3)), 2, np.full(3, 1 / 3))


def test_gram_sketch_frobenius_bound():
    g = np.random.default_rng(11)
    A = g.standard_normal((15, 40)) * np.linspace(0.2, 2, 40)
    p = matmul_probs(A, mode="from_a_squared")
    c = 10
    errs = [np.linalg.norm(A @ A.T - (lambda C: C @ C.T)(gram_sketch(A, c, p, RngSeed(11, t))))
            for t in range(2000)]
    assert np.mean(errs) <= 1.1 * np.linalg.norm(A) ** 2 / math.sqrt(c)


def test_spectral_sample_size():
    assert spectral_sample_size(1.0, 1.0, 1.0, 1.0) == math.ceil(96 * math.log(96)) == 439
    assert spectral_sample_size(2.0, 1, 0.5, 0.1) > 2 * spectral_sample_size(1.0, 1, 0.5, 0.1)
    with pytest.raises(RandLAError):
        spectral_sample_size(1 / 48, 1, 0.5, 0.5)
    for bad in ((1, 0, 0.5, 0.5), (1, 1, 0, 0.5), (1, 1, 0.5, 0), (1, 1.5, 0.5, 0.5)):
        with pytest.raises(RandLAError):
            spectral_sample_size(*bad)


mats = st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda d: st.tuples(arrays(float, (d[0], d[1]), elements=st.floats(-10, 10)),
                        arrays(float, (d[1], d[2]), elements=st.floats(-10, 10))))


@settings(max_examples=60, deadline=None)
@given(mats, st.integers(1, 10), st.integers(0, 2**32))
def test_sample_invariants(AB, c, seed):
    A, B = AB
    w = np.linalg.norm(A, axis=0) * np.linalg.norm(B, axis=1)
    if not np.any(w):
        return
    for mode in ("optimal", "uniform"):
        p = matmul_probs(A, B, mode)
        assert np.all(p >= 0) and p.sum() == pytest.approx(1.0)
        s = approx_multiply(A, B, c, p, seed)
        sc = 1 / np.sqrt(c * p[s.indices])
        assert np.allclose(s.C, A[:, s.indices] * sc)
        assert np.allclose(s.R, B[s.indices] * sc[:, None])
        assert 0 < s.beta <= 1
        if mode == "optimal":
            assert s.beta == pytest.approx(1.0)
