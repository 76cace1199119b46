"""Graph Laplacians, effective resistances, spectral sparsification and solvers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, cg

from .core import RandLAError, as_seed, as_vector, sample_indices


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise RandLAError("graph needs at least one vertex")
        if not (len(self.u) == len(self.v) == len(self.w)):
            raise RandLAError("edge arrays differ in length")
        if np.any(self.u == self.v):
            raise RandLAError("self-loops are not allowed")
        if len(self.u) and (min(self.u.min(), self.v.min()) < 0 or max(self.u.max(), self.v.max()) >= self.n):
            raise RandLAError("edge endpoint out of range")
        if np.any(~np.isfinite(self.w)) or np.any(self.w <= 0):
            raise RandLAError("edge weights must be positive and finite")

    @classmethod
    def from_edges(cls, n: int, edges) -> "WeightedGraph":
        e = np.asarray(list(edges), dtype=float).reshape(-1, 3)
        return cls(int(n), e[:, 0].astype(np.int64), e[:, 1].astype(np.int64), e[:, 2].copy())

    @property
    def m(self) -> int:
        return len(self.w)

    def edges(self):
        return list(zip(self.u.tolist(), self.v.tolist(), self.w.tolist()))

    def adjacency(self) -> sp.csr_matrix:
        W = sp.coo_matrix((self.w, (self.u, self.v)), shape=(self.n, self.n))
        return (W + W.T).tocsr()

    def components(self) -> np.ndarray:
        return connected_components(self.adjacency(), directed=False)[1]

    @property
    def is_connected(self) -> bool:
        return self.n == 1 or connected_components(self.adjacency(), directed=False)[0] == 1


def edge_incidence(G: WeightedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Signed m x n incidence matrix (+1 on the lower vertex index) and weights."""
    B = np.zeros((G.m, G.n))
    rows = np.arange(G.m)
    lo, hi = np.minimum(G.u, G.v), np.maximum(G.u, G.v)
    B[rows, lo] = 1.0
    B[rows, hi] = -1.0
    return B, G.w.copy()


def laplacian(G: WeightedGraph) -> np.ndarray:
    B, w = edge_incidence(G)
    return B.T @ (w[:, None] * B)


def _require_connected(G):
    if not G.is_connected:
        raise RandLAError("graph is disconnected")


def effective_resistances(G: WeightedGraph) -> np.ndarray:
    """Per-edge ``b_e^T L^+ b_e`` via a dense pseudoinverse."""
    _require_connected(G)
    B, _ = edge_incidence(G)
    Lp = _laplacian_pinv(laplacian(G))
    return np.einsum("ij,jk,ik->i", B, Lp, B)


def _laplacian_pinv(L: np.ndarray) -> np.ndarray:
    # connected graph: (L + 11^T/n)^{-1} - 11^T/n
    n = L.shape[0]
    J = np.full((n, n), 1.0 / n)
    return np.linalg.inv(L + J) - J


def sparsify_graph(G: WeightedGraph, r: int, seed=0) -> WeightedGraph:
    """Sample r edges i.i.d. with probability ``w_e R_e / (n - 1)``.

    Each draw contributes weight ``w_e / (r p_e)``; repeated edges merge.
    Check ``is_connected`` on the result before using it as a sparsifier.
    """
    _require_connected(G)
    if r < G.n:
        raise RandLAError("r must be at least the number of vertices")
    lev = G.w * effective_resistances(G)
    p = lev / lev.sum()
    s = sample_indices(p, int(r), "exact_c", seed)
    # scale^2 = 1/(r p_e), so each draw adds w_e / (r p_e)
    contrib = G.w[s.indices] * s.scales**2
    uniq, inv = np.unique(s.indices, return_inverse=True)
    w = np.bincount(inv, weights=contrib)
    return WeightedGraph(G.n, G.u[uniq], G.v[uniq], w)


def spectral_similarity(L: np.ndarray, Lt: np.ndarray) -> tuple[float, float]:
    """Extreme values of ``x^T Lt x / x^T L x`` over x orthogonal to the ones vector."""
    n = L.shape[0]
    # orthonormal basis of the complement of the all-ones vector
    Z = sla.null_space(np.ones((1, n)))
    lam = sla.eigh(Z.T @ Lt @ Z, Z.T @ L @ Z, eigvals_only=True)
    return float(lam[0]), float(lam[-1])


@dataclass(frozen=True)
class LaplacianSolveResult:
    x: np.ndarray
    l_norm_error_estimate: float
    method: str
    iterations: int
    sparsifier_edge_count: int
    connected_sparsifier: bool = True


def _completed_factor(Gs: WeightedGraph, G: WeightedGraph):
    """Cholesky factor of the sparsifier Laplacian made nonsingular.

    A connected sparsifier gets ``11^T/n``; otherwise each component c gets
    ``(cut_G(c) / |c|^2) 1_c 1_c^T`` so the quadratic form of L is matched on
    component indicators.
    """
    Lt = laplacian(Gs)
    n = Gs.n
    labels = Gs.components()
    comps = np.unique(labels)
    if comps.size == 1:
        Lt += 1.0 / n
        return sla.cho_factor(Lt)
    L = laplacian(G)
    for c in comps:
        ind = (labels == c).astype(float)
        size = ind.sum()
        Lt += (ind @ L @ ind) / size**2 * np.outer(ind, ind)
    return sla.cho_factor(Lt)


def _center(x):
    return x - x.mean()


def solve_laplacian(G: WeightedGraph, b, eps: float = 0.5, mode: str = "direct_on_sketch",
                    seed=0, sparsifier: WeightedGraph | None = None,
                    tol: float = 1e-10, max_iter: int | None = None) -> LaplacianSolveResult:
    """Solve ``L x = b`` through a spectral sparsifier.

    ``direct_on_sketch`` returns ``Lt^+ b`` for a sparsifier built from
    ceil(8 n ln n / eps^2) samples. ``preconditioned_cg`` runs CG on L with
    a dense factorization of a sparsifier from 4n samples as preconditioner.
    A ready-made ``sparsifier`` overrides sampling.
    """
    b = as_vector(b)
    _require_connected(G)
    n = G.n
    if b.size != n:
        raise RandLAError("right-hand side has the wrong length")
    if abs(b.sum()) > 1e-10 * max(1.0, np.abs(b).sum()):
        raise RandLAError("incompatible right-hand side: entries must sum to zero")
    b = _center(b)
    if mode not in ("direct_on_sketch", "preconditioned_cg"):
        raise RandLAError(f"unknown mode {mode!r}")
    seed = as_seed(seed)
    if sparsifier is None:
        r = int(np.ceil(8 * n * np.log(n) / eps**2)) if mode == "direct_on_sketch" else 4 * n
        sparsifier = sparsify_graph(G, max(r, n), seed)
    connected = sparsifier.is_connected
    if not np.any(b):
        return LaplacianSolveResult(np.zeros(n), 0.0, mode, 0, sparsifier.m, connected)
    factor = _completed_factor(sparsifier, G)
    if mode == "direct_on_sketch":
        x = _center(sla.cho_solve(factor, b))
        return LaplacianSolveResult(x, float(eps), mode, 0, sparsifier.m, connected)
    L = laplacian(G)
    M = LinearOperator((n, n), matvec=lambda y: _center(sla.cho_solve(factor, _center(np.ravel(y)))),
                       dtype=float)
    count = [0]

    def tick(_):
        count[0] += 1

    x, info = cg(L, b, rtol=tol, atol=0.0, M=M, maxiter=max_iter or 10 * n, callback=tick)
    x = _center(x)
    rel = float(np.linalg.norm(L @ x - b) / np.linalg.norm(b))
    return LaplacianSolveResult(x, rel, mode, count[0], sparsifier.m, connected)
