"""Dense kernels, seeded randomness and the basic sampling primitives.

Matrices are plain float64 ``numpy.ndarray`` objects. Every randomized
routine takes a seed (an ``int`` or an :class:`RngSeed`) and is a pure
function of its inputs and that seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np
import scipy.linalg as sla

EPS = np.finfo(float).eps


class RandLAError(ValueError):
    """Raised when an input violates an operation's preconditions."""


# ---------------------------------------------------------------- seeding

@dataclass(frozen=True)
class RngSeed:
    """Counter-based seed: a (seed, stream_id) pair mapped to a Philox stream."""

    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < 2**64:
                raise RandLAError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence([int(self.seed), int(self.stream_id)])
        return np.random.Generator(np.random.Philox(ss))

    def child(self, key: int) -> "RngSeed":
        """Independent sub-stream labelled by ``key`` (same base seed)."""
        ss = np.random.SeedSequence([int(self.seed), int(self.stream_id), int(key)])
        return RngSeed(int(self.seed), int(ss.generate_state(1, np.uint64)[0]))


def as_seed(seed) -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    if isinstance(seed, (int, np.integer)) and not isinstance(seed, bool):
        return RngSeed(int(seed), 0)
    raise RandLAError(f"seed must be an int or RngSeed, got {type(seed).__name__}")


def rng(seed) -> np.random.Generator:
    return as_seed(seed).generator()


# ------------------------------------------------------------- validation

def as_matrix(A, name: str = "A") -> np.ndarray:
    """Validate a dense real matrix (2-D, nonempty, finite) and return float64."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise RandLAError(f"{name} must be 2-D, got shape {A.shape}")
    if A.size == 0:
        raise RandLAError(f"{name} is empty")
    if not np.all(np.isfinite(A)):
        raise RandLAError(f"{name} has non-finite entries")
    return A


def as_vector(b, name: str = "b") -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim == 2 and 1 in b.shape:
        b = b.ravel()
    if b.ndim != 1:
        raise RandLAError(f"{name} must be a vector, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise RandLAError(f"{name} has non-finite entries")
    return b


def check_probs(probs, n: int | None = None, tol: float = 1e-12) -> np.ndarray:
    """Validate a probability vector and renormalize it exactly."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise RandLAError("probabilities must be a nonempty 1-D vector")
    if n is not None and p.size != n:
        raise RandLAError(f"expected {n} probabilities, got {p.size}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise RandLAError("probabilities must be finite and nonnegative")
    s = p.sum()
    if abs(s - 1.0) > tol:
        raise RandLAError(f"probabilities sum to {s!r}, not 1")
    return p / s


def default_tolerance(A: np.ndarray, smax: float | None = None) -> float:
    if smax is None:
        smax = np.linalg.norm(A, 2) if A.size else 0.0
    return max(A.shape) * smax * EPS


# ------------------------------------------------------ streaming sampler

def select_stream(weights: Iterable[float], seed, size: int | None = None):
    """One-pass weighted selection with O(1) state per sample.

    Keeps a running total ``D`` and replaces the current pick by item ``i``
    with probability ``a_i / D``. With ``size`` set, that many independent
    samplers share the single pass and arrays are returned.
    """
    g = rng(seed)
    total = 0.0
    m = 1 if size is None else int(size)
    idx = np.full(m, -1, dtype=np.int64)
    val = np.zeros(m)
    seen = False
    for i, a in enumerate(weights):
        seen = True
        a = float(a)
        if not np.isfinite(a) or a < 0:
            raise RandLAError(f"invalid weight {a!r} at position {i}")
        if a == 0.0:
            continue
        total += a
        take = g.random(m) < a / total
        idx[take] = i
        val[take] = a
    if not seen or total == 0.0:
        raise RandLAError("degenerate weight stream")
    if size is None:
        return int(idx[0]), float(val[0])
    return idx, val


# ---------------------------------------------------------- batch sampling

@dataclass(frozen=True)
class IndexSample:
    """Sampled indices with their rescaling factors.

    Represents the sampling-and-rescaling matrix ``S D`` (n x c): column t
    is ``scales[t] * e_{indices[t]}``.
    """

    indices: np.ndarray
    scales: np.ndarray
    mode: str
    source_dim: int
    probs: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.indices) != len(self.scales):
            raise RandLAError("indices and scales differ in length")
        if np.any(~np.isfinite(self.scales)) or np.any(self.scales <= 0):
            raise RandLAError("scales must be positive and finite")

    def __len__(self):
        return len(self.indices)

    def matrix(self) -> np.ndarray:
        """The n x c matrix ``S D``."""
        S = np.zeros((self.source_dim, len(self.indices)))
        S[self.indices, np.arange(len(self.indices))] = self.scales
        return S

    def take_columns(self, A: np.ndarray) -> np.ndarray:
        return A[:, self.indices] * self.scales

    def take_rows(self, A: np.ndarray) -> np.ndarray:
        return A[self.indices] * self.scales[:, None] if A.ndim == 2 else A[self.indices] * self.scales


def sample_indices(probs, c: int, mode: Literal["exact_c", "expected_c"] = "exact_c",
                   seed=0) -> IndexSample:
    """Draw indices according to ``probs``.

    ``exact_c``: c i.i.d. draws with replacement, scale ``1/sqrt(c p_i)``.
    ``expected_c``: index i kept independently with probability
    ``min(1, c p_i)``, scale ``1/sqrt(min(1, c p_i))``.
    """
    if int(c) != c or c < 1:
        raise RandLAError(f"sample count must be a positive integer, got {c!r}")
    c = int(c)
    p = check_probs(probs)
    g = rng(seed)
    if mode == "exact_c":
        cdf = np.cumsum(p)
        cdf /= cdf[-1]
        idx = np.searchsorted(cdf, g.random(c), side="right")
        # guards the u -> 1 edge and never lands on a zero-mass index
        idx = np.minimum(idx, np.flatnonzero(p)[-1])
        scales = 1.0 / np.sqrt(c * p[idx])
    elif mode == "expected_c":
        incl = np.minimum(1.0, c * p)
        keep = g.random(p.size) < incl
        idx = np.flatnonzero(keep)
        scales = 1.0 / np.sqrt(incl[idx])
    else:
        raise RandLAError(f"unknown sampling mode {mode!r}")
    return IndexSample(idx.astype(np.int64), scales, mode, p.size, p)


# ---------------------------------------------------------- factorizations

@dataclass(frozen=True)
class FactorizationBundle:
    kind: str
    factors: dict
    numerical_rank: int
    rank_tolerance: float
    singular_values: np.ndarray = field(repr=False, default=None)

    def product(self) -> np.ndarray:
        f = self.factors
        if self.kind == "qr":
            return f["Q"] @ f["R"]
        if self.kind == "svd":
            return (f["U"] * f["s"]) @ f["Vt"]
        if self.kind == "pinv":
            return f["pinv"]
        raise RandLAError(self.kind)


def factorize(A, kind: Literal["qr", "svd", "pinv"] = "svd",
              rank_tolerance: float | None = None) -> FactorizationBundle:
    """Thin QR, thin SVD or Moore-Penrose pseudoinverse of ``A``."""
    A = as_matrix(A)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    tol = default_tolerance(A, s[0]) if rank_tolerance is None else float(rank_tolerance)
    rank = int(np.sum(s > tol))
    if kind == "qr":
        Q, R = sla.qr(A, mode="economic")
        factors = {"Q": Q, "R": R}
    elif kind == "svd":
        factors = {"U": U, "s": s, "Vt": Vt}
    elif kind == "pinv":
        inv = np.zeros_like(s)
        inv[:rank] = 1.0 / s[:rank]
        factors = {"pinv": (Vt.T * inv) @ U.T}
    else:
        raise RandLAError(f"unknown factorization kind {kind!r}")
    return FactorizationBundle(kind, factors, rank, tol, s)


def range_basis(A, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis for the numerical column space of ``A``."""
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return U[:, :0]
    tol = default_tolerance(A, s[0]) if tol is None else tol
    return U[:, : int(np.sum(s > tol))]


def pinv(A, tol: float | None = None) -> np.ndarray:
    return factorize(A, "pinv", tol).factors["pinv"]


def stable_rank(A) -> float:
    A = as_matrix(A)
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        raise RandLAError("undefined stable rank for the zero matrix")
    return float(np.sum((s / s[0]) ** 2))


def best_rank_k(A: np.ndarray, k: int) -> np.ndarray:
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return (U[:, :k] * s[:k]) @ Vt[:k]
