"""Statistical leverage scores: exact, fast approximate, and rank-k."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .core import RandLAError, as_matrix, as_seed, range_basis
from .sketch import apply_sketch, make_sketch


@dataclass(frozen=True)
class LeverageProfile:
    scores: np.ndarray
    probs: np.ndarray
    k: int
    beta: float
    method: str
    q: int | None = None


def _profile(scores, k, beta, method, q=None) -> LeverageProfile:
    total = scores.sum()
    if total <= 0:
        raise RandLAError("all leverage scores vanish")
    return LeverageProfile(scores, scores / total, int(k), float(beta), method, q)


def leverage_exact(A, basis: str = "svd") -> LeverageProfile:
    """Row leverage scores of a tall matrix (squared row norms of a range basis).

    ``basis="qr"`` uses a thin QR factor and assumes full column rank;
    ``"svd"`` handles rank deficiency.
    """
    A = as_matrix(A)
    m, n = A.shape
    if m < n:
        raise RandLAError("leverage_exact expects a tall matrix; pass A.T for column scores")
    if not np.any(A):
        raise RandLAError("leverage scores undefined for the zero matrix")
    if basis == "svd":
        U = range_basis(A)
    elif basis == "qr":
        U = sla.qr(A, mode="economic")[0]
    else:
        raise RandLAError(f"unknown basis {basis!r}")
    scores = np.sum(U * U, axis=1)
    return _profile(scores, U.shape[1], 1.0, "exact")


def coherence(A) -> float:
    return float(np.max(leverage_exact(A).scores))


def leverage_fast(A, eps: float = 0.5, seed=0, c1: float = 4.0, c2: float = 9.0,
                  project: bool = True) -> LeverageProfile:
    """Approximate leverage scores of a tall-and-thin matrix.

    An SRHT with r1 = ceil(c1 n ln m / eps^2) rows gives a triangular factor
    R of the sketch; rows of ``A R^{-1} Pi2`` with a Gaussian Pi2 of
    r2 = ceil(c2 ln m / eps^2) columns have squared norms close to the true
    scores. ``project=False`` skips Pi2 and returns norms of ``A R^{-1}``.
    """
    A = as_matrix(A)
    m, n = A.shape
    if m < 4 * n:
        raise RandLAError("leverage_fast needs m >= 4 n")
    if not 0 < eps <= 0.5:
        raise RandLAError("eps must lie in (0, 1/2]")
    seed = as_seed(seed)
    r1 = int(np.ceil(c1 * n * np.log(m) / eps**2))
    r2 = int(np.ceil(c2 * np.log(m) / eps**2))
    Pi1 = make_sketch("srht", m, r1, seed.child(1))
    R = sla.qr(apply_sketch(Pi1, A, "left"), mode="r")[0][:n]
    d = np.abs(np.diag(R))
    if d.min() <= n * np.finfo(float).eps * d.max():
        raise RandLAError("sketch lost rank; increase r1 (c1) or check that A has full column rank")
    if project:
        Pi2 = make_sketch("gaussian", n, r2, seed.child(2)).matrix().T  # n x r2, N(0, 1/r2)
        Omega = A @ sla.solve_triangular(R, Pi2)
    else:
        Omega = sla.solve_triangular(R, A.T, trans="T").T
    scores = np.sum(Omega * Omega, axis=1)
    beta = (1 - eps) / (1 + eps)
    return _profile(scores, n, beta, "fast")


def leverage_rank_k(A, k: int, q: int = 0, seed=0) -> LeverageProfile:
    """Rank-k leverage scores from the sketch ``B = (A A^T)^q A Pi``.

    Pi is Gaussian with 2k columns. Scores are squared row norms of the top-k
    left singular vectors of B, which equal the exact rank-k scores when
    rank(A) = k.
    """
    A = as_matrix(A)
    m, n = A.shape
    if not 1 <= k <= min(m, n):
        raise RandLAError(f"k must lie in [1, {min(m, n)}]")
    if not np.any(A):
        raise RandLAError("leverage scores undefined for the zero matrix")
    if q < 0:
        raise RandLAError("q must be >= 0")
    Pi = make_sketch("gaussian", n, 2 * k, seed).matrix().T
    Y = sla.qr(A @ Pi, mode="economic")[0]
    for _ in range(q):
        Z = sla.qr(A.T @ Y, mode="economic")[0]
        Y = sla.qr(A @ Z, mode="economic")[0]
    # Y spans the sketch range; recover B's leading singular directions
    B = Y @ (Y.T @ A)
    U = range_basis(B)[:, :k]
    scores = np.sum(U * U, axis=1)
    return _profile(scores, k, 1.0, "rank_k", q)


def rank_k_scores(A, k: int) -> np.ndarray:
    """Exact rank-k leverage scores from the truncated SVD."""
    U = np.linalg.svd(as_matrix(A), full_matrices=False)[0][:, :k]
    return np.sum(U * U, axis=1)
