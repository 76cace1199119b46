import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randla import RandLAError, RngSeed
from randla.core import IndexSample
from randla.sketch import (KINDS, apply_sketch, embedding_check, from_index_sample, fwht,
                           hd_transform, make_sketch, next_pow2)


def hadamard(n):
    H = np.array([[1.0]])
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]])
    return H / np.sqrt(n)


def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 5, 1024, 1025)] == [1, 2, 4, 8, 1024, 2048]


def test_fwht_matches_sylvester():
    X = np.random.default_rng(0).standard_normal((16, 3))
    assert np.allclose(fwht(X), hadamard(16) @ X)
    assert np.allclose(fwht(np.eye(2)), np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    with pytest.raises(RandLAError):
        fwht(np.ones(3))


def test_srht_two_point_transform():
    op = make_sketch("srht", 2, 2, 0, replace=False)
    D = np.diag(op.payload["signs"])
    H2 = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert np.allclose(op.matrix(), (H2 @ D)[op.payload["rows"]])


def test_unknown_kind_and_dims():
    with pytest.raises(RandLAError):
        make_sketch("fourier", 4, 2)
    with pytest.raises(RandLAError):
        make_sketch("gaussian", 4, 0)


def test_gaussian_norm_expectation():
    x = np.ones(50) / np.sqrt(50)
    vals = np.array([np.sum(apply_sketch(make_sketch("gaussian", 50, 50, RngSeed(1, t)), x) ** 2)
                     for t in range(10_000)])
    # ||Sx||^2 * r is chi-square with r degrees of freedom: variance 2/r
    assert abs(vals.mean() - 1.0) <= 3 * math.sqrt(2 / 50 / vals.size)


def test_achlioptas_zero_fraction():
    S = make_sketch("sparse_achlioptas", 1000, 100, 3).matrix()
    assert abs(np.mean(S == 0) - 2 / 3) <= 0.01
    assert np.allclose(np.unique(np.abs(S[S != 0])), math.sqrt(3 / 100))


def test_dense_entries_scaled():
    R = make_sketch("rademacher", 20, 9, 0).matrix()
    assert np.allclose(np.abs(R), 1 / 3)


@pytest.mark.parametrize("kind", KINDS)
def test_expected_gram_is_identity(kind):
    n, r, T = 6, 3, 10_000
    acc = np.zeros((n, n))
    for t in range(T):
        S = make_sketch(kind, n, r, RngSeed(9, t)).matrix()
        acc += S.T @ S
    assert np.max(np.abs(acc / T - np.eye(n))) <= 0.05


@pytest.mark.parametrize("kind", KINDS)
def test_deterministic(kind):
    A = np.random.default_rng(0).standard_normal((37, 4))
    op = make_sketch(kind, 37, 12, 5)
    assert np.array_equal(apply_sketch(op, A), apply_sketch(op, A))
    assert np.array_equal(apply_sketch(make_sketch(kind, 37, 12, 5), A), apply_sketch(op, A))


@pytest.mark.parametrize("kind", KINDS)
def test_left_right_consistent(kind):
    g = np.random.default_rng(2)
    A = g.standard_normal((21, 5))
    op = make_sketch(kind, 21, 8, 1)
    S = op.matrix()
    assert np.allclose(apply_sketch(op, A, "left"), S @ A)
    assert np.allclose(apply_sketch(op, A.T, "right"), A.T @ S.T)


def test_blockwise_generation_matches_materialized(monkeypatch):
    import randla.sketch as sk
    A = np.random.default_rng(3).standard_normal((40, 2))
    full = apply_sketch(make_sketch("gaussian", 40, 600, 4), A)
    monkeypatch.setattr(sk, "MATERIALIZE_LIMIT", 10)
    lazy = make_sketch("gaussian", 40, 600, 4)
    assert "matrix" not in lazy.payload
    assert np.array_equal(apply_sketch(lazy, A), full)


def test_column_sample_right():
    A = np.arange(12.0).reshape(3, 4)
    s = 0.7
    op = from_index_sample(IndexSample(np.array([0, 0]), np.array([s, s]), "exact_c", 4))
    assert np.allclose(apply_sketch(op, A, "right"), np.column_stack([s * A[:, 0], s * A[:, 0]]))


def test_hd_preserves_norm():
    x = np.random.default_rng(4).standard_normal(64)
    signs = make_sketch("srht", 64, 1, 0).payload["signs"]
    assert np.linalg.norm(hd_transform(x, signs)) == pytest.approx(np.linalg.norm(x), rel=1e-12)


def test_zero_matrix_maps_to_zero():
    assert not np.any(apply_sketch(make_sketch("gaussian", 5, 3, 0), np.zeros((5, 2))))


def test_dimension_mismatch():
    op = make_sketch("srht", 5, 3, 0)
    with pytest.raises(RandLAError):
        apply_sketch(op, np.ones((4, 2)))
    with pytest.raises(RandLAError):
        apply_sketch(op, np.ones((2, 4)), "right")
    with pytest.raises(RandLAError):
        apply_sketch(op, np.ones((5, 2)), "middle")


def test_embedding_defect_trivial_cases():
    U = np.linalg.qr(np.random.default_rng(5).standard_normal((30, 4)))[0]
    ident = from_index_sample(IndexSample(np.arange(30), np.ones(30), "exact_c", 30))
    assert embedding_check(ident, U) == pytest.approx(0, abs=1e-12)
    full = make_sketch("srht", 30, 32, 7, replace=False)
    assert embedding_check(full, U) <= 1e-10
    with pytest.raises(RandLAError):
        embedding_check(ident, 2 * U)


def test_srht_embedding_rate():
    U = np.linalg.qr(np.random.default_rng(6).standard_normal((2048, 10)))[0]
    r = math.ceil(4 * 10 * math.log(10) * 40)
    ok = sum(embedding_check(make_sketch("srht", 2048, r, RngSeed(6, t)), U) <= 0.5 for t in range(100))
    assert ok >= 95


def test_hadamard_flattening():
    x = np.random.default_rng(7).standard_normal(1024)
    x /= np.linalg.norm(x)
    worst = max(np.max(np.abs(hd_transform(x, make_sketch("srht", 1024, 1, RngSeed(7, t)).payload["signs"])))
                for t in range(100))
    assert worst <= 6 * math.sqrt(math.log(1024) / 1024)


def test_ac_fjlt_density():
    op = make_sketch("ac_fjlt", 256, 40, 0)
    assert op.payload["q"] == pytest.approx(math.log(256) ** 2 / 256)
    op = make_sketch("ac_fjlt", 256, 40, 0, q=0.5)
    assert abs(op.payload["P"].nnz / (40 * 256) - 0.5) < 0.05
    with pytest.raises(RandLAError):
        make_sketch("ac_fjlt", 16, 4, 0, q=0.0)


def test_jl_all_pairs():
    n, eps = 100, 0.3
    X = np.random.default_rng(8).standard_normal((n, 50))
    k = math.ceil(9 * math.log(n) / (eps**2 - eps**3))
    i, j = np.triu_indices(n, 1)
    D0 = np.sum((X[i] - X[j]) ** 2, axis=1)
    hits = 0
    for t in range(100):
        Y = apply_sketch(make_sketch("gaussian", 50, k, RngSeed(8, t)), X, "right")
        ratio = np.sum((Y[i] - Y[j]) ** 2, axis=1) / D0
        hits += bool(np.all(np.abs(ratio - 1) <= eps))
    assert hits >= 40


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(KINDS), st.integers(1, 40), st.integers(1, 20), st.integers(0, 2**32))
def test_shapes_and_vectors(kind, n, r, seed):
    op = make_sketch(kind, n, r, seed)
    x = np.arange(1.0, n + 1)
    y = apply_sketch(op, x)
    assert y.shape == (r,)
    assert np.allclose(y, op.matrix() @ x)
