"""Element-wise sparsification, quantization and the one-pass Sample(s, n) sampler."""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .core import RandLAError, as_matrix, rng


@dataclass(frozen=True)
class SparseSample:
    """Sparse estimate of a matrix stored as coordinate triples."""

    shape: tuple[int, int]
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    scheme: str
    p: float
    b: float
    expected_nnz: float

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.rows, self.cols] = self.values
        return out

    def to_sparse(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, (self.rows, self.cols)), shape=self.shape)


def log_floor(n: int) -> float:
    """The additive floor constant (8 ln n)^4 / n."""
    return (8.0 * np.log(n)) ** 4 / n


def magnitude_probs(A: np.ndarray, p: float, floor: float | None = None) -> np.ndarray:
    """``min(1, max(tau, sqrt(tau * floor)))`` with ``tau = p A^2 / b^2``."""
    b = np.max(np.abs(A))
    tau = p * (A / b) ** 2
    fl = log_floor(max(A.shape)) if floor is None else floor
    return np.minimum(1.0, np.maximum(tau, np.sqrt(tau * fl)))


def _nonzero(A):
    A = as_matrix(A)
    b = float(np.max(np.abs(A)))
    if b == 0.0:
        raise RandLAError("A must be nonzero")
    return A, b


def sparsify(A, p: float, scheme: str = "uniform_p", seed=0,
             floor: float | None = None) -> SparseSample:
    """Keep entries at random and rescale so that E[A_hat] = A.

    ``uniform_p`` keeps each entry with probability p. ``magnitude`` keeps
    entry (i, j) with ``p_ij = min(1, max(tau_ij, sqrt(tau_ij (8 ln n)^4 / n)))``
    where ``tau_ij = p A_ij^2 / b^2``; ``floor`` overrides ``(8 ln n)^4 / n``.
    """
    A, b = _nonzero(A)
    if not 0 < p <= 1:
        raise RandLAError("p must lie in (0, 1]")
    u = rng(seed).random(A.shape)
    if scheme == "uniform_p":
        P = np.where(A != 0, p, 0.0)
    elif scheme == "magnitude":
        P = magnitude_probs(A, p, floor)
    else:
        raise RandLAError(f"unknown scheme {scheme!r}")
    keep = (u < P) & (A != 0)
    r, c = np.nonzero(keep)
    return SparseSample(A.shape, r, c, A[r, c] / P[r, c], scheme, float(p), b, float(P.sum()))


def quantize(A, seed=0) -> SparseSample:
    """Round every entry to +b or -b with P(+b) = 1/2 + A_ij / (2 b)."""
    A, b = _nonzero(A)
    plus = rng(seed).random(A.shape) < 0.5 + A / (2 * b)
    r, c = np.indices(A.shape).reshape(2, -1)
    vals = np.where(plus, b, -b).ravel()
    return SparseSample(A.shape, r, c, vals, "quantize", 1.0, b, float(A.size))


def sample_stream(entries: Iterable[tuple[int, int, float]], s: float, n: int, seed=0,
                  shape: tuple[int, int] | None = None,
                  floor: float | None = None) -> SparseSample:
    """One pass over (i, j, value) triples with a priority queue.

    Each entry gets a uniform r_ij and key
    ``max(s A^2 / r, (s A^2 / r^2) (8 ln n)^4 / n)``; entries whose key falls
    below the running total ``z = sum A^2`` are evicted. Survivors are
    rescaled by their keep probability computed from the final z.
    """
    if s <= 0:
        raise RandLAError("s must be positive")
    fl = log_floor(n) if floor is None else floor
    g = rng(seed)
    heap: list = []
    order = itertools.count()
    z = 0.0
    bmax = 0.0
    mi = mj = -1
    for i, j, v in entries:
        i, j, v = int(i), int(j), float(v)
        if not np.isfinite(v):
            raise RandLAError(f"non-finite value at ({i}, {j})")
        mi, mj = max(mi, i), max(mj, j)
        if v == 0.0:
            continue
        r = 1.0 - g.random()  # in (0, 1]
        z += v * v
        bmax = max(bmax, abs(v))
        key = max(s * v * v / r, s * v * v / r**2 * fl)
        heapq.heappush(heap, (key, next(order), i, j, v))
        while heap and heap[0][0] < z:
            heapq.heappop(heap)
    if shape is None:
        shape = (mi + 1, mj + 1) if mi >= 0 else (0, 0)
    if not heap:
        e = np.zeros(0)
        return SparseSample(shape, e.astype(int), e.astype(int), e, "magnitude", 0.0, bmax, 0.0)
    kept = sorted(heap, key=lambda t: t[1])
    rows = np.array([t[2] for t in kept])
    cols = np.array([t[3] for t in kept])
    vals = np.array([t[4] for t in kept])
    tau = s * vals**2 / z
    pij = np.minimum(1.0, np.maximum(tau, np.sqrt(tau * fl)))
    p_equiv = s * bmax**2 / z
    return SparseSample(shape, rows, cols, vals / pij, "magnitude", float(p_equiv), bmax, float("nan"))


def structural_error_check(A, A_hat, k: int) -> tuple[float, float, float, float]:
    """Both sides of the perturbation bounds for ``A_hat = A + N``.

    Returns ``(lhs2, rhs2, lhsF, rhsF)`` with lhs ``||A - A_hat_k||`` and
    rhs ``||A - A_k||_2 + 2 ||N_k||_2`` or
    ``||A - A_k||_F + ||N_k||_F + 2 sqrt(||N_k||_F ||A_k||_F)``.
    """
    A = as_matrix(A)
    Ah = A_hat.to_dense() if isinstance(A_hat, SparseSample) else as_matrix(A_hat, "A_hat")
    if Ah.shape != A.shape:
        raise RandLAError("shape mismatch")
    if not 1 <= k <= min(A.shape):
        raise RandLAError("k out of range")

    def trunc(M):
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        return (U[:, :k] * s[:k]) @ Vt[:k], s

    Ahk, _ = trunc(Ah)
    Ak, sA = trunc(A)
    _, sN = trunc(Ah - A)
    tail2 = sA[k] if k < sA.size else 0.0
    tailF = np.sqrt(np.sum(sA[k:] ** 2))
    Nk2, NkF = sN[0], np.sqrt(np.sum(sN[:k] ** 2))
    AkF = np.sqrt(np.sum(sA[:k] ** 2))
    return (float(np.linalg.norm(A - Ahk, 2)), float(tail2 + 2 * Nk2),
            float(np.linalg.norm(A - Ahk)), float(tailF + NkF + 2 * np.sqrt(NkF * AkF)))
