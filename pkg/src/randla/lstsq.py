"""Overdetermined least squares: exact, sketch-and-solve and sketch-to-precondition."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator
from scipy.sparse.linalg import lsqr as _scipy_lsqr

from .core import EPS, RandLAError, as_matrix, as_seed, as_vector, range_basis, sample_indices
from .leverage import leverage_exact, leverage_fast
from .sketch import SketchOperator, apply_sketch, from_index_sample, make_sketch

STRATEGIES = ("leverage_sample", "fast_leverage_sample", "uniform_sample", "srht", "gaussian")


@dataclass(frozen=True)
class LsSolution:
    x: np.ndarray
    residual_norm: float
    method: str
    iterations: int = 0
    precond_condition_estimate: float | None = None
    retries: int = 0
    success: bool = True
    message: str = ""
    sketch: SketchOperator | None = field(default=None, repr=False, compare=False)
    R: np.ndarray | None = field(default=None, repr=False, compare=False)


def _check_system(A, b):
    A = as_matrix(A)
    b = as_vector(b)
    if b.size != A.shape[0]:
        raise RandLAError(f"dimension mismatch: A has {A.shape[0]} rows, b has {b.size}")
    return A, b


def _min_norm_solve(A, b):
    """Minimal-norm solution: QR when A has full column rank, pseudoinverse otherwise."""
    Q, R = sla.qr(A, mode="economic")
    d = np.abs(np.diag(R))
    if d.size and d.min() > max(A.shape) * EPS * d.max():
        return sla.solve_triangular(R, Q.T @ b), True
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > max(A.shape) * EPS * s[0])) if s[0] > 0 else 0
    return Vt[:r].T @ ((U[:, :r].T @ b) / s[:r]), False


def solve_exact(A, b) -> LsSolution:
    A, b = _check_system(A, b)
    if A.shape[0] < A.shape[1]:
        raise RandLAError("solve_exact expects m >= n")
    x, _ = _min_norm_solve(A, b)
    return LsSolution(x, float(np.linalg.norm(A @ x - b)), "exact")


def sketch_size(d: int, eps: float, c_r: float = 4.0) -> int:
    """Default sketch size ceil(c_r d ln d / eps^2)."""
    return int(np.ceil(c_r * d * np.log(max(d, 2)) / eps**2))


def solve_sketched(A, b, strategy: str = "srht", r: int | None = None, seed=0,
                   eps: float = 0.5) -> LsSolution:
    """Solve ``min ||S A x - S b||`` for a random sketch S with r rows."""
    A, b = _check_system(A, b)
    m, n = A.shape
    if m < n:
        raise RandLAError("solve_sketched expects m >= n")
    r = sketch_size(n, eps) if r is None else int(r)
    if r < n:
        raise RandLAError("sketch size r must be at least n")
    seed = as_seed(seed)
    if strategy in ("leverage_sample", "fast_leverage_sample", "uniform_sample"):
        if strategy == "leverage_sample":
            p = leverage_exact(A).probs
        elif strategy == "fast_leverage_sample":
            p = leverage_fast(A, min(eps, 0.5), seed.child(7)).probs
        else:
            p = np.full(m, 1.0 / m)
        op = from_index_sample(sample_indices(p, r, "exact_c", seed), seed)
    elif strategy in ("srht", "gaussian"):
        op = make_sketch(strategy, m, r, seed)
    else:
        raise RandLAError(f"unknown strategy {strategy!r}")
    SA = apply_sketch(op, A, "left")
    Sb = apply_sketch(op, b, "left")
    x, full_rank = _min_norm_solve(SA, Sb)
    msg = "" if full_rank else "sketched matrix is rank deficient; re-seed or enlarge r"
    return LsSolution(x, float(np.linalg.norm(A @ x - b)), f"sketched-{strategy}",
                      success=full_rank, message=msg, sketch=op)


def _as_dense_op(op, m: int) -> np.ndarray | SketchOperator:
    if isinstance(op, SketchOperator):
        if op.source_dim != m:
            raise RandLAError("sketch source dimension does not match A")
        return op
    X = as_matrix(op, "X")
    if X.shape[1] != m:
        raise RandLAError("X must have as many columns as A has rows")
    return X


def check_conditions(A, b, op) -> tuple[float, float]:
    """Return ``(sigma_min(X U_A), ||U_A^T X^T X b_perp||^2)`` for a sketch X."""
    A, b = _check_system(A, b)
    X = _as_dense_op(op, A.shape[0])
    U = range_basis(A)
    b_perp = b - U @ (U.T @ b)
    if isinstance(X, SketchOperator):
        XU = apply_sketch(X, U, "left")
        Xb = apply_sketch(X, b_perp, "left")
    else:
        XU, Xb = X @ U, X @ b_perp
    smin = float(np.linalg.svd(XU, compute_uv=False)[-1]) if XU.shape[0] >= XU.shape[1] else 0.0
    cross = float(np.linalg.norm(XU.T @ Xb) ** 2)
    return smin, cross


def lsqr(A, b, precond_R=None, tol: float = 1e-14, max_iter: int | None = None) -> LsSolution:
    """LSQR on ``min ||A R^{-1} y - b||`` with ``x = R^{-1} y``.

    Stops when both standard backward-error tests drop below ``tol``
    (atol = btol = tol) or after ``max_iter`` iterations.
    """
    A, b = _check_system(A, b)
    m, n = A.shape
    if tol <= 0:
        raise RandLAError("tol must be positive")
    max_iter = 4 * n if max_iter is None else int(max_iter)
    if precond_R is None:
        op = A
    else:
        R = as_matrix(precond_R, "R")
        op = LinearOperator(
            (m, n), dtype=float,
            matvec=lambda y: A @ sla.solve_triangular(R, np.ravel(y)),
            rmatvec=lambda z: sla.solve_triangular(R, A.T @ np.ravel(z), trans="T"),
        )
    out = _scipy_lsqr(op, b, atol=tol, btol=tol, conlim=1e300, iter_lim=max_iter)
    y, istop, itn = out[0], out[1], out[2]
    x = y if precond_R is None else sla.solve_triangular(R, y)
    ok = istop in (1, 2, 4, 5) or (istop == 0 and not np.any(b))
    return LsSolution(x, float(np.linalg.norm(A @ x - b)), "lsqr" if precond_R is None else "lsqr-precond",
                      iterations=int(itn), success=bool(ok and itn <= max_iter and istop != 7),
                      message="" if ok else "iteration limit reached")


def triangular_condition_estimate(R) -> float:
    """1-norm condition estimate of an upper-triangular matrix (LAPACK trcon)."""
    R = np.asfortranarray(R, dtype=float)
    rcond, info = sla.lapack.dtrcon(R, norm="1", uplo="U", diag="N")
    if info != 0:
        raise RandLAError("condition estimation failed")
    return float(np.inf) if rcond == 0 else 1.0 / float(rcond)


def blendenpik_preconditioner(A, gamma: float, seed=0) -> tuple[np.ndarray, SketchOperator]:
    """R factor of ``S H D A`` with ceil(gamma d) uniformly sampled rows."""
    m, d = A.shape
    op = make_sketch("srht", m, int(np.ceil(gamma * d)), seed)
    R = sla.qr(apply_sketch(op, A, "left"), mode="r")[0][:d]
    return R, op


def solve_precond(A, b, gamma: float = 6.0, tol: float = 1e-14, seed=0,
                  max_attempts: int = 3, max_iter: int | None = None) -> LsSolution:
    """Randomized-Hadamard preconditioned LSQR with retry and exact fallback."""
    A, b = _check_system(A, b)
    m, d = A.shape
    if m < 4 * d:
        raise RandLAError("solve_precond expects m >= 4 n")
    if gamma < 1.5:
        raise RandLAError("gamma must be at least 1.5")
    seed = as_seed(seed)
    kappa = None
    for attempt in range(max_attempts):
        R, op = blendenpik_preconditioner(A, gamma, seed.child(attempt))
        kappa = triangular_condition_estimate(R)
        if 1.0 / kappa > 5 * EPS:
            sol = lsqr(A, b, R, tol, max_iter)
            return LsSolution(sol.x, sol.residual_norm, "precond", sol.iterations, kappa,
                              attempt, sol.success, sol.message, op, R)
    sol = solve_exact(A, b)
    return LsSolution(sol.x, sol.residual_norm, "precond-fallback-exact", 0, kappa,
                      max_attempts, True, "preconditioner rejected; solved directly")
