"""Approximate matrix multiplication by sampled outer products."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RandLAError, as_matrix, check_probs, sample_indices

PROB_MODES = ("optimal", "from_a", "from_a_squared", "uniform")


@dataclass(frozen=True)
class MatmulSample:
    C: np.ndarray
    R: np.ndarray
    probs_used: np.ndarray
    c: int
    beta: float
    indices: np.ndarray

    def product(self) -> np.ndarray:
        return self.C @ self.R


def _summand_norms(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.linalg.norm(A, axis=0) * np.linalg.norm(B, axis=1)


def matmul_probs(A, B=None, mode: str = "optimal") -> np.ndarray:
    """Column/row sampling probabilities for approximating ``A @ B``.

    ``optimal``: proportional to ``|A^(k)| |B_(k)|``; ``from_a``: proportional
    to ``|A^(k)|``; ``from_a_squared``: ``|A^(k)|^2 / |A|_F^2``; ``uniform``.
    """
    A = as_matrix(A)
    if not np.any(A):
        raise RandLAError("degenerate probabilities: A is zero")
    if mode == "optimal":
        if B is None:
            raise RandLAError("optimal probabilities need B")
        B = as_matrix(B, "B")
        if B.shape[0] != A.shape[1]:
            raise RandLAError("inner dimensions disagree")
        w = _summand_norms(A, B)
    elif mode == "from_a":
        w = np.linalg.norm(A, axis=0)
    elif mode == "from_a_squared":
        w = np.sum(A * A, axis=0)
    elif mode == "uniform":
        w = np.ones(A.shape[1])
    else:
        raise RandLAError(f"unknown probability mode {mode!r}")
    s = w.sum()
    if s == 0.0:
        raise RandLAError("degenerate probabilities: every summand is zero")
    return w / s


def quality_factor(A, B, probs) -> float:
    """beta = min_k p_k / p_k^opt over indices with nonzero optimal mass."""
    w = _summand_norms(A, B)
    popt = w / w.sum()
    live = popt > 0
    return float(min(1.0, np.min(probs[live] / popt[live])))


def approx_multiply(A, B, c: int, probs, seed=0) -> MatmulSample:
    """Sample c column/row pairs i.i.d. from ``probs`` and rescale by 1/sqrt(c p)."""
    A = as_matrix(A)
    B = as_matrix(B, "B")
    if A.shape[1] != B.shape[0]:
        raise RandLAError("inner dimensions disagree")
    if c < 1:
        raise RandLAError("c must be >= 1")
    p = check_probs(probs, A.shape[1])
    w = _summand_norms(A, B)
    if not np.any(w):
        raise RandLAError("degenerate product: every outer product is zero")
    if np.any((p == 0) & (w > 0)):
        raise RandLAError("probabilities vanish on a nonzero outer product; estimator would be biased")
    s = sample_indices(p, c, "exact_c", seed)
    C = A[:, s.indices] * s.scales
    R = B[s.indices] * s.scales[:, None]
    return MatmulSample(C, R, p, int(c), quality_factor(A, B, p), s.indices)


def gram_sketch(A, c: int, probs, seed=0) -> np.ndarray:
    """Sampled columns C (m x c) with ``C C^T`` approximating ``A A^T``."""
    A = as_matrix(A)
    return approx_multiply(A, A.T, c, probs, seed).C


def expected_sq_error(A, B, probs, c: int) -> float:
    """Closed-form E||AB - CR||_F^2 for i.i.d. sampling with ``probs``."""
    A, B = as_matrix(A), as_matrix(B, "B")
    w2 = _summand_norms(A, B) ** 2
    live = w2 > 0
    return float((np.sum(w2[live] / probs[live]) - np.linalg.norm(A @ B) ** 2) / c)


def spectral_sample_size(frobA2: float, beta: float, eps: float, delta: float) -> int:
    """Sample count for the spectral-norm product bound (inputs with ||A||_2 <= 1)."""
    if not 0 < beta <= 1:
        raise RandLAError("beta must lie in (0, 1]")
    if not 0 < eps <= 1:
        raise RandLAError("eps must lie in (0, 1]")
    if not 0 < delta <= 1:
        raise RandLAError("delta must lie in (0, 1]")
    if not frobA2 >= 1 / 24:
        raise RandLAError("squared Frobenius norm must be at least 1/24")
    x = 96.0 * frobA2 / (beta * eps**2)
    return int(np.ceil(x * np.log(x / np.sqrt(delta))))
