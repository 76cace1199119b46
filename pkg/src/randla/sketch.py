"""Random sketching operators: sampling, dense and sparse projections, SRHT.

A :class:`SketchOperator` stands for an r x n matrix ``S``. ``apply_sketch``
computes ``S @ A`` (left) or ``A @ S.T`` (right).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import IndexSample, RandLAError, as_matrix, as_seed, sample_indices, RngSeed

KINDS = ("column_sample", "gaussian", "rademacher", "sparse_achlioptas", "srht", "ac_fjlt")
DENSE_KINDS = ("gaussian", "rademacher", "sparse_achlioptas")

# dense sketches larger than this many entries are regenerated block by block
MATERIALIZE_LIMIT = 2**22
_BLOCK = 256


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def fwht(X: np.ndarray) -> np.ndarray:
    """Normalized fast Walsh-Hadamard transform along axis 0.

    Length must be a power of two. Uses the Sylvester ordering, so for
    length 2 the transform is ``[[1, 1], [1, -1]] / sqrt(2)``.
    """
    X = np.array(X, dtype=float)
    vec = X.ndim == 1
    if vec:
        X = X[:, None]
    n = X.shape[0]
    if n & (n - 1):
        raise RandLAError(f"Hadamard length must be a power of two, got {n}")
    h = 1
    while h < n:
        Y = X.reshape(n // (2 * h), 2, h, -1)
        a, b = Y[:, 0], Y[:, 1]
        X = np.concatenate([a + b, a - b], axis=1).reshape(n, -1)
        h *= 2
    X /= np.sqrt(n)
    return X[:, 0] if vec else X


def hd_transform(X: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Apply ``H D`` (normalized Hadamard after random signs) with zero padding."""
    X = np.asarray(X, dtype=float)
    n_pad = signs.size
    pad = np.zeros((n_pad,) + X.shape[1:])
    pad[: X.shape[0]] = X
    pad *= signs.reshape((-1,) + (1,) * (X.ndim - 1))
    return fwht(pad)


@dataclass(frozen=True)
class SketchOperator:
    kind: str
    source_dim: int
    target_dim: int
    seed: RngSeed
    payload: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_pad(self) -> int:
        return next_pow2(self.source_dim)

    def matrix(self) -> np.ndarray:
        """Dense r x n representation (for testing and small problems)."""
        return apply_sketch(self, np.eye(self.source_dim), "left")

    def _dense_block(self, b: int) -> np.ndarray:
        lo = b * _BLOCK
        hi = min(self.target_dim, lo + _BLOCK)
        g = self.seed.child(b).generator()
        shape = (hi - lo, self.source_dim)
        r = self.target_dim
        if self.kind == "gaussian":
            return g.standard_normal(shape) / np.sqrt(r)
        if self.kind == "rademacher":
            return (2.0 * g.integers(0, 2, shape) - 1.0) / np.sqrt(r)
        u = g.random(shape)
        vals = np.where(u < 1 / 6, 1.0, np.where(u < 1 / 3, -1.0, 0.0))
        return vals * np.sqrt(3.0 / r)

    def dense_blocks(self):
        if "matrix" in self.payload:
            yield 0, self.payload["matrix"]
            return
        for b in range(-(-self.target_dim // _BLOCK)):
            yield b * _BLOCK, self._dense_block(b)


def make_sketch(kind: str, source_dim: int, target_dim: int, seed=0, *,
                probs=None, q: float | None = None, c_q: float = 1.0,
                n_points: int | None = None, replace: bool = True) -> SketchOperator:
    """Build an r x n sketching operator.

    kind
        ``gaussian`` (N(0,1)/sqrt(r)), ``rademacher`` (+-1/sqrt(r)),
        ``sparse_achlioptas`` (sqrt(3/r) * {+1, 0, -1} w.p. 1/6, 2/3, 1/6),
        ``srht`` (uniform rows of the randomized Hadamard transform,
        rescaled by sqrt(n_pad/r)), ``ac_fjlt`` (sparse Gaussian P after HD)
        or ``column_sample`` (i.i.d. rows drawn from ``probs``, uniform by
        default).
    replace
        ``srht`` only: sample rows with replacement (default) or draw r
        distinct rows (requires r <= n_pad).
    q, c_q, n_points
        ``ac_fjlt`` density. Defaults to ``min(1, c_q ln(n_points)^2 / n_pad)``
        with ``n_points`` defaulting to ``source_dim``.
    """
    if kind not in KINDS:
        raise RandLAError(f"unsupported sketch kind {kind!r}")
    n, r = int(source_dim), int(target_dim)
    if n < 1 or r < 1:
        raise RandLAError("source_dim and target_dim must be >= 1")
    seed = as_seed(seed)
    payload: dict = {}
    if kind == "column_sample":
        p = np.full(n, 1.0 / n) if probs is None else probs
        payload["sample"] = sample_indices(p, r, "exact_c", seed)
    elif kind in DENSE_KINDS:
        op = SketchOperator(kind, n, r, seed)
        if n * r <= MATERIALIZE_LIMIT:
            payload["matrix"] = np.vstack([blk for _, blk in op.dense_blocks()])
    else:
        g = seed.generator()
        n_pad = next_pow2(n)
        payload["signs"] = 2.0 * g.integers(0, 2, n_pad) - 1.0
        if kind == "srht":
            if replace:
                payload["rows"] = g.integers(0, n_pad, r)
            elif r <= n_pad:
                payload["rows"] = g.permutation(n_pad)[:r]
            else:
                raise RandLAError("cannot draw more distinct rows than n_pad")
        else:
            if q is None:
                npts = n if n_points is None else n_points
                q = min(1.0, c_q * np.log(max(npts, 2)) ** 2 / n_pad)
            if not 0 < q <= 1:
                raise RandLAError(f"sparsity q must lie in (0, 1], got {q}")
            mask = sp.random(r, n_pad, density=q, format="csr", random_state=g,
                             data_rvs=lambda k: g.standard_normal(k) / np.sqrt(q))
            payload["P"] = mask
            payload["q"] = q
    return SketchOperator(kind, n, r, seed, payload)


def from_index_sample(sample: IndexSample, seed=0) -> SketchOperator:
    """Wrap an existing :class:`IndexSample` as a left sampling operator."""
    return SketchOperator("column_sample", sample.source_dim, len(sample),
                          as_seed(seed), {"sample": sample})


def _apply_left(op: SketchOperator, A: np.ndarray) -> np.ndarray:
    k = op.kind
    if k == "column_sample":
        s = op.payload["sample"]
        return A[s.indices] * s.scales[:, None]
    if k in DENSE_KINDS:
        out = np.empty((op.target_dim, A.shape[1]))
        for lo, blk in op.dense_blocks():
            out[lo: lo + blk.shape[0]] = blk @ A
        return out
    Y = hd_transform(A, op.payload["signs"])
    if k == "srht":
        return Y[op.payload["rows"]] * np.sqrt(op.n_pad / op.target_dim)
    return np.asarray(op.payload["P"] @ Y) / np.sqrt(op.target_dim)


def apply_sketch(op: SketchOperator, A, side: str = "left") -> np.ndarray:
    """``op @ A`` for side='left', ``A @ op.T`` for side='right'."""
    A = np.asarray(A, dtype=float)
    vec = A.ndim == 1
    if vec:
        A = A[:, None] if side == "left" else A[None, :]
    A = as_matrix(A)
    if side == "left":
        if A.shape[0] != op.source_dim:
            raise RandLAError(f"dimension mismatch: operator source {op.source_dim}, "
                              f"matrix has {A.shape[0]} rows")
        out = _apply_left(op, A)
    elif side == "right":
        if A.shape[1] != op.source_dim:
            raise RandLAError(f"dimension mismatch: operator source {op.source_dim}, "
                              f"matrix has {A.shape[1]} columns")
        out = _apply_left(op, A.T).T
    else:
        raise RandLAError(f"side must be 'left' or 'right', got {side!r}")
    return out.ravel() if vec else out


def embedding_check(op: SketchOperator, U) -> float:
    """Spectral-norm defect ``||I - (S U)^T (S U)||_2`` of the sketch on span(U)."""
    U = as_matrix(U, "U")
    d = U.shape[1]
    if np.max(np.abs(U.T @ U - np.eye(d))) > 1e-8:
        raise RandLAError("U must have orthonormal columns")
    SU = apply_sketch(op, U, "left")
    return float(np.linalg.norm(np.eye(d) - SU.T @ SU, 2))
