"""Low-rank approximation: column sampling, CX/CUR, Nystrom, CSSP and range finders."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .core import (EPS, FactorizationBundle, IndexSample, RandLAError, as_matrix, as_seed,
                   default_tolerance, pinv, range_basis, rng, sample_indices)
from .sketch import SketchOperator

POSTERIOR_FACTOR = 10.0 * np.sqrt(2.0 / np.pi)


def _svd(A):
    return np.linalg.svd(A, full_matrices=False)


def projection_residual(A: np.ndarray, C: np.ndarray, ord="fro") -> float:
    """``||A - P_C A||`` with P_C the orthogonal projector onto range(C)."""
    Q = range_basis(C) if C.size else C
    return float(np.linalg.norm(A - Q @ (Q.T @ A), ord))


def _column_probs(A: np.ndarray) -> np.ndarray:
    w = np.sum(A * A, axis=0)
    return w / w.sum()


# ----------------------------------------------------- additive-error sampling

@dataclass(frozen=True)
class ColumnSketchSVD:
    C: np.ndarray
    H_k: np.ndarray
    sigma_C: np.ndarray
    k: int
    indices: np.ndarray = field(repr=False)
    rank_deficient: bool = False


def linear_time_svd(A, c: int, k: int, probs=None, seed=0) -> ColumnSketchSVD:
    """Top-k left singular vectors of a column sample C (c columns, rescaled).

    When rank(C) < k the basis is completed with orthonormal directions
    orthogonal to range(C) and ``rank_deficient`` is set; ``sigma_C`` then
    lists only the positive singular values.
    """
    A = as_matrix(A)
    m, n = A.shape
    if not 1 <= k <= c:
        raise RandLAError("need 1 <= k <= c")
    if k > m:
        raise RandLAError("k cannot exceed the number of rows")
    p = _column_probs(A) if probs is None else probs
    s = sample_indices(p, c, "exact_c", seed)
    C = s.take_columns(A)
    U, sig, _ = np.linalg.svd(C, full_matrices=False)
    r = int(np.sum(sig > default_tolerance(C, sig[0]))) if sig[0] > 0 else 0
    if r >= k:
        return ColumnSketchSVD(C, U[:, :k], sig[:k], k, s.indices)
    Ufull = np.linalg.svd(C, full_matrices=True)[0]
    return ColumnSketchSVD(C, Ufull[:, :k], sig[:r], k, s.indices, True)


def linear_time_svd_bounds(A, result: ColumnSketchSVD) -> dict:
    """Both sides of the Frobenius and spectral additive-error inequalities."""
    A = as_matrix(A)
    k, H, C = result.k, result.H_k, result.C
    s = np.linalg.svd(A, compute_uv=False)
    E = A - H @ (H.T @ A)
    G = A @ A.T - C @ C.T
    return {
        "lhs_fro": float(np.linalg.norm(E) ** 2),
        "rhs_fro": float(np.sum(s[k:] ** 2) + 2 * np.sqrt(k) * np.linalg.norm(G)),
        "lhs_2": float(np.linalg.norm(E, 2) ** 2),
        "rhs_2": float((s[k] if k < s.size else 0.0) ** 2 + 2 * np.linalg.norm(G, 2)),
    }


def select_columns(A, c: int, t: int = 1, seed=0) -> tuple[np.ndarray, np.ndarray]:
    """Multipass column selection.

    Each of the t rounds draws c columns i.i.d. with probabilities
    proportional to the squared column norms of the current residual
    ``A - P_C A``. Stops early once the residual vanishes.
    """
    A = as_matrix(A)
    if c < 1 or t < 1:
        raise RandLAError("c and t must be >= 1")
    seed = as_seed(seed)
    scale = np.linalg.norm(A)
    idx = np.zeros(0, dtype=np.int64)
    E = A
    for ell in range(t):
        if np.linalg.norm(E) <= 1e-12 * scale or scale == 0:
            break
        s = sample_indices(_column_probs(E), c, "exact_c", seed.child(ell))
        idx = np.concatenate([idx, s.indices])
        Q = range_basis(A[:, idx])
        E = A - Q @ (Q.T @ A)
    return A[:, idx], idx


# ------------------------------------------------------ relative-error CX/CUR

def _vk_probs(A: np.ndarray, k: int) -> np.ndarray:
    Vk = _svd(A)[2][:k].T
    w = np.sum(Vk * Vk, axis=1)
    return w / w.sum()


def relative_sample_size(k: int, eps: float, c_k: float = 4.0) -> int:
    return int(np.ceil(c_k * k * np.log(k + 1) / eps**2))


@dataclass(frozen=True)
class CXFactors:
    C: np.ndarray
    X: np.ndarray
    column_indices: np.ndarray
    residual: float
    optimal: float
    success: bool

    def __iter__(self):
        return iter((self.C, self.X))


def _check_rank_params(A, k, eps):
    if not 1 <= k <= min(A.shape):
        raise RandLAError(f"k must lie in [1, {min(A.shape)}]")
    if not 0 < eps <= 1:
        raise RandLAError("eps must lie in (0, 1]")


def cx_decompose(A, k: int, eps: float = 0.5, seed=0, c: int | None = None,
                 c_k: float = 4.0) -> CXFactors:
    """CX decomposition with columns drawn from rank-k leverage scores."""
    A = as_matrix(A)
    _check_rank_params(A, k, eps)
    c = relative_sample_size(k, eps, c_k) if c is None else int(c)
    s = sample_indices(_vk_probs(A, k), c, "exact_c", seed)
    C = A[:, s.indices]
    X = pinv(C) @ A
    res = float(np.linalg.norm(A - C @ X))
    opt = float(np.sqrt(np.sum(np.linalg.svd(A, compute_uv=False)[k:] ** 2)))
    return CXFactors(C, X, s.indices, res, opt, res <= (1 + eps) * opt + 1e-12 * np.linalg.norm(A))


@dataclass(frozen=True)
class CURFactors:
    C: np.ndarray
    U: np.ndarray
    R: np.ndarray
    column_indices: np.ndarray
    row_indices: np.ndarray
    mode: str
    row_scales: np.ndarray = field(repr=False, default=None)

    def product(self) -> np.ndarray:
        return self.C @ self.U @ self.R


def cur_decompose(A, k: int, eps: float = 0.5, mode: str = "strong", seed=0,
                  c: int | None = None, c_k: float = 4.0) -> CURFactors:
    """CUR decomposition.

    weak: rows and columns chosen independently from rank-k leverage scores,
    ``U = C^+ A R^+``. strong: rows chosen by the leverage of C's column
    space, ``W = D S^T C``, ``R = D S^T A`` and ``U = W^+``.
    """
    A = as_matrix(A)
    _check_rank_params(A, k, eps)
    seed = as_seed(seed)
    c = relative_sample_size(k, eps, c_k) if c is None else int(c)
    cols = sample_indices(_vk_probs(A, k), c, "exact_c", seed.child(1))
    C = A[:, cols.indices]
    if mode == "weak":
        rows = sample_indices(_vk_probs(A.T, k), c, "exact_c", seed.child(2))
        R = A[rows.indices]
        U = pinv(C) @ A @ pinv(R)
        return CURFactors(C, U, R, cols.indices, rows.indices, mode, np.ones(len(rows)))
    if mode != "strong":
        raise RandLAError(f"unknown CUR mode {mode!r}")
    UC = range_basis(C)
    rho = UC.shape[1]
    lev = np.sum(UC * UC, axis=1)
    r = relative_sample_size(rho, eps, c_k)
    rows = sample_indices(lev / lev.sum(), r, "exact_c", seed.child(2))
    W = rows.take_rows(C)
    R = rows.take_rows(A)
    return CURFactors(C, pinv(W), R, cols.indices, rows.indices, mode, rows.scales)


def nystrom(A, sample) -> tuple[np.ndarray, np.ndarray]:
    """Nystrom factors ``C = A S`` and ``W^+ = (S^T A S)^+`` of an SPSD matrix."""
    A = as_matrix(A)
    n = A.shape[0]
    scale = max(1.0, float(np.max(np.abs(A))))
    if A.shape[1] != n or np.max(np.abs(A - A.T)) > 1e-10 * scale:
        raise RandLAError("nystrom expects a symmetric matrix")
    if np.linalg.eigvalsh((A + A.T) / 2)[0] < -1e-8 * scale:
        raise RandLAError("nystrom expects a positive semidefinite matrix")
    if isinstance(sample, IndexSample):
        S = sample.matrix()
    elif isinstance(sample, SketchOperator):
        S = sample.matrix().T
    else:
        S = as_matrix(sample, "S")
    if S.shape[0] != n:
        raise RandLAError("sample does not match the matrix size")
    C = A @ S
    W = S.T @ C
    W = (W + W.T) / 2
    lam, V = np.linalg.eigh(W)
    keep = lam > default_tolerance(W, max(lam.max(), 0.0)) if lam.max() > 0 else np.zeros_like(lam, bool)
    W_pinv = (V[:, keep] / lam[keep]) @ V[:, keep].T
    return C, (W_pinv + W_pinv.T) / 2


# ------------------------------------------------------------------ CSSP

@dataclass(frozen=True)
class CSSPResult:
    indices: np.ndarray
    C: np.ndarray
    residual_ratio: float

    def __iter__(self):
        return iter((self.indices, self.C))


def cssp(A, k: int, seed=0, c: int | None = None, c_s: float = 4.0,
         mode: str = "frobenius") -> CSSPResult:
    """Two-stage column subset selection returning exactly k columns of A.

    A randomized stage keeps c = ceil(c_s k ln(k+1)) rescaled columns of
    ``V_k^T``; column-pivoted QR on that sample picks k of them.
    """
    A = as_matrix(A)
    m, n = A.shape
    if not 1 <= k <= min(m, n):
        raise RandLAError(f"k must lie in [1, {min(m, n)}]")
    seed = as_seed(seed)
    U, s, Vt = _svd(A)
    Vk = Vt[:k].T
    lev = np.sum(Vk * Vk, axis=1)
    if mode == "frobenius":
        p = lev / k
    elif mode == "spectral":
        # squared column norms of A - A_k
        tail = np.sum(A * A, axis=0) - np.sum((U[:, :k].T @ A) ** 2, axis=0)
        tail = np.maximum(tail, 0.0)
        p = lev / (2 * k) + (tail / (2 * tail.sum()) if tail.sum() > 0 else lev / (2 * k))
    else:
        raise RandLAError(f"unknown CSSP mode {mode!r}")
    p = p / p.sum()
    c = int(np.ceil(c_s * k * np.log(k + 1))) if c is None else int(c)
    for attempt in range(2):
        smp = sample_indices(p, c, "exact_c", seed.child(attempt))
        M = Vk.T[:, smp.indices] * smp.scales
        _, R, piv = sla.qr(M, mode="economic", pivoting=True)
        d = np.abs(np.diag(R))
        if d[k - 1] > k * EPS * max(d[0], 1.0) * c:
            idx = smp.indices[piv[:k]]
            C = A[:, idx]
            opt = np.sqrt(np.sum(s[k:] ** 2))
            res = projection_residual(A, C)
            ratio = res / opt if opt > 0 else (0.0 if res <= 1e-10 * s[0] else np.inf)
            return CSSPResult(idx, C, float(ratio))
    raise RandLAError("sampled right singular block is rank deficient after a re-seed")


# ------------------------------------------------------------ range finders

@dataclass(frozen=True)
class RangeBasis:
    Q: np.ndarray
    ell: int
    k: int
    oversample_p: int
    power_q: int
    posterior_error_estimate: float | None = None
    exhausted: bool = False


def _orth(Y):
    return sla.qr(Y, mode="economic")[0]


def range_finder(A, k: int, p: int = 10, q: int = 0, seed=0) -> RangeBasis:
    """Orthonormal basis of ``(A A^T)^q A Pi`` for a Gaussian n x (k+p) Pi.

    The sketch is re-orthonormalized after every multiplication by A or A^T.
    """
    A = as_matrix(A)
    m, n = A.shape
    ell = k + p
    if k < 1 or p < 0 or q < 0:
        raise RandLAError("need k >= 1, p >= 0, q >= 0")
    if ell > min(m, n):
        raise RandLAError("k + p exceeds min(m, n)")
    Pi = rng(seed).standard_normal((n, ell))
    Q = _orth(A @ Pi)
    for _ in range(q):
        Q = _orth(A @ _orth(A.T @ Q))
    return RangeBasis(Q, ell, k, p, q)


def posterior_error_estimate(A, Q, r: int = 10, seed=0) -> float:
    """``10 sqrt(2/pi) max_i ||(I - Q Q^T) A g_i||`` over r Gaussian probes.

    Bounds ``||(I - Q Q^T) A||_2`` with probability at least ``1 - 10^-r``.
    """
    A = as_matrix(A)
    Q = Q.Q if isinstance(Q, RangeBasis) else np.asarray(Q, dtype=float)
    Y = A @ rng(seed).standard_normal((A.shape[1], r))
    Y -= Q @ (Q.T @ Y)
    return float(POSTERIOR_FACTOR * np.max(np.linalg.norm(Y, axis=0)))


def adaptive_range_finder(A, eps: float, r_probe: int = 10, seed=0,
                          max_basis: int | None = None) -> RangeBasis:
    """Grow Q one probe at a time until r consecutive probe residuals are small.

    Stops once the last ``r_probe`` residual probes all have norm at most
    ``eps / (10 sqrt(2/pi))``.
    """
    A = as_matrix(A)
    m, n = A.shape
    if eps <= 0 or r_probe < 1:
        raise RandLAError("need eps > 0 and r_probe >= 1")
    cap = min(m, n) if max_basis is None else min(int(max_basis), m)
    g = rng(seed)
    thresh = eps / POSTERIOR_FACTOR
    Y = A @ g.standard_normal((n, r_probe))  # window of the r most recent probes
    Q = np.zeros((m, 0))
    exhausted = False
    while np.max(np.linalg.norm(Y, axis=0)) > thresh:
        if Q.shape[1] >= cap:
            exhausted = True
            break
        y = Y[:, 0]
        y = y - Q @ (Q.T @ y)
        y = y - Q @ (Q.T @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0:
            Y = Y[:, 1:]
        else:
            qv = y / nrm
            Q = np.column_stack([Q, qv])
            Y = Y[:, 1:]
            Y = Y - np.outer(qv, qv @ Y)
        ynew = A @ g.standard_normal(n)
        ynew = ynew - Q @ (Q.T @ ynew)
        Y = np.column_stack([Y, ynew])
    est = float(POSTERIOR_FACTOR * np.max(np.linalg.norm(Y, axis=0)))
    ell = Q.shape[1]
    return RangeBasis(Q, ell, ell, 0, 0, est, exhausted)


def factor_from_basis(A, basis, target: str = "partial_svd") -> FactorizationBundle:
    """Turn a range basis into a partial QR or partial SVD of ``Q Q^T A``."""
    A = as_matrix(A)
    Q = basis.Q if isinstance(basis, RangeBasis) else as_matrix(basis, "Q")
    ell = Q.shape[1]
    if ell and np.max(np.abs(Q.T @ Q - np.eye(ell))) > 1e-8:
        raise RandLAError("basis must have orthonormal columns")
    Q1, R1 = sla.qr(Q, mode="economic")
    D = R1 @ (Q.T @ A)
    if target == "partial_qr":
        Q2, R = sla.qr(D, mode="economic")
        s = np.linalg.svd(R, compute_uv=False)
        tol = default_tolerance(A, s[0] if s.size else 0.0)
        return FactorizationBundle("qr", {"Q": Q1 @ Q2, "R": R}, int(np.sum(s > tol)), tol, s)
    if target == "partial_svd":
        U2, s, Vt = _svd(D)
        tol = default_tolerance(A, s[0] if s.size else 0.0)
        return FactorizationBundle("svd", {"U": Q1 @ U2, "s": s, "Vt": Vt}, int(np.sum(s > tol)), tol, s)
    raise RandLAError(f"unknown target {target!r}")


# ------------------------------------------------------ structural theorem

@dataclass(frozen=True)
class StructuralBound:
    lhs: float
    rhs: float
    omega1_min_sv: float
    full_rank: bool

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.omega1_min_sv))


def _sketch_matrix(S, n: int) -> np.ndarray:
    if isinstance(S, IndexSample):
        M = S.matrix()
    elif isinstance(S, SketchOperator):
        M = S.matrix().T
    else:
        M = as_matrix(S, "S")
    if M.shape[0] != n:
        raise RandLAError("sketch does not match the column dimension of A")
    return M


def structural_bound_check(A, S, k: int, norm: str = "frobenius") -> StructuralBound:
    """Evaluate ``||(I - P_C) A|| <= ||A - A_k|| + ||(A - A_k) S Omega1^+||`` for C = A S.

    ``Omega1 = V_k^T S``. If Omega1 loses rank the hypothesis fails and the
    right side is returned as +inf.
    """
    A = as_matrix(A)
    ord_ = {"frobenius": "fro", "spectral": 2}.get(norm)
    if ord_ is None:
        raise RandLAError(f"unknown norm {norm!r}")
    M = _sketch_matrix(S, A.shape[1])
    U, s, Vt = _svd(A)
    if not 1 <= k <= s.size:
        raise RandLAError("k out of range")
    Omega1 = Vt[:k] @ M
    sv = np.linalg.svd(Omega1, compute_uv=False)
    smin = float(sv[k - 1]) if sv.size >= k else 0.0
    lhs = projection_residual(A, A @ M, ord_)
    tail = A - (U[:, :k] * s[:k]) @ Vt[:k]
    base = float(np.linalg.norm(tail, ord_))
    if smin <= max(Omega1.shape) * EPS * max(sv[0] if sv.size else 0.0, 1.0):
        return StructuralBound(lhs, np.inf, smin, False)
    extra = float(np.linalg.norm(tail @ M @ np.linalg.pinv(Omega1), ord_))
    return StructuralBound(lhs, base + extra, smin, True)
