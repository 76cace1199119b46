"""Synthetic test matrices and graphs."""
from __future__ import annotations

import numpy as np

from .core import RandLAError, rng
from .laplacian import WeightedGraph

MATRIX_PROFILES = ("gaussian", "coherent_spike", "low_rank_plus_noise", "power_law_leverage")
GRAPH_PROFILES = ("graph_random", "graph_path")
PROFILES = MATRIX_PROFILES + GRAPH_PROFILES


def _orth(g, m, k):
    return np.linalg.qr(g.standard_normal((m, k)))[0]


def gaussian(m, n, seed=0, cond: float | None = None, spectrum=None):
    """Gaussian matrix, or an incoherent matrix with prescribed singular values.

    ``cond`` gives log-spaced singular values from 1 down to 1/cond;
    ``spectrum`` gives them explicitly.
    """
    g = rng(seed)
    if cond is None and spectrum is None:
        return g.standard_normal((m, n))
    k = min(m, n)
    s = np.logspace(0, -np.log10(cond), k) if spectrum is None else np.asarray(spectrum, float)
    return (_orth(g, m, k) * s) @ _orth(g, n, k).T


def coherent_spike(m, n, k=1, seed=0, noise: float = 0.0):
    """First k columns are e_1..e_k (rows 0..k-1 otherwise zero): coherence 1.

    ``noise`` adds a small Gaussian perturbation to the whole matrix.
    """
    if k > min(m, n):
        raise RandLAError("k must not exceed min(m, n)")
    g = rng(seed)
    A = g.standard_normal((m, n))
    A[:k] = 0.0
    A[:, :k] = 0.0
    A[np.arange(k), np.arange(k)] = 1.0
    if noise:
        A += noise * g.standard_normal((m, n))
    return A


def low_rank_plus_noise(m, n, k, eta: float = 0.0, seed=0, decay: float | None = None):
    """Rank-k factor product plus eta times a Gaussian matrix."""
    g = rng(seed)
    L = g.standard_normal((m, k))
    if decay is not None:
        L *= decay ** np.arange(k)
    A = L @ g.standard_normal((k, n))
    if eta:
        A += eta * g.standard_normal((m, n))
    return A


def power_law_leverage(m, n, alpha: float = 1.0, seed=0):
    """Gaussian matrix with rows scaled by (i+1)^-alpha, skewing leverage toward the top rows."""
    g = rng(seed)
    return g.standard_normal((m, n)) * (np.arange(1, m + 1) ** -alpha)[:, None]


def graph_random(n, avg_degree: float = 8.0, seed=0, wmin: float = 1.0, wmax: float = 1.0):
    """Erdos-Renyi graph plus a random Hamiltonian path (always connected)."""
    g = rng(seed)
    iu, ju = np.triu_indices(n, 1)
    mask = g.random(iu.size) < min(1.0, avg_degree / max(n - 1, 1))
    perm = g.permutation(n)
    a = np.concatenate([iu[mask], np.minimum(perm[:-1], perm[1:])])
    b = np.concatenate([ju[mask], np.maximum(perm[:-1], perm[1:])])
    key = np.unique(a * n + b)
    u, v = key // n, key % n
    w = g.uniform(wmin, wmax, u.size) if wmax > wmin else np.full(u.size, float(wmin))
    return WeightedGraph(n, u.astype(np.int64), v.astype(np.int64), w)


def graph_path(n, weight: float = 1.0):
    u = np.arange(n - 1, dtype=np.int64)
    return WeightedGraph(n, u, u + 1, np.full(n - 1, float(weight)))


def generate_matrix(profile: str, dims, params: dict | None = None, seed=0):
    """Build a matrix (or graph) from a named profile.

    Matrix profiles take ``dims = (m, n)``; graph profiles take ``dims = (n,)``.
    """
    params = dict(params or {})
    dims = [int(d) for d in np.atleast_1d(dims)]
    if any(d < 1 for d in dims):
        raise RandLAError("dimensions must be positive")
    if profile in MATRIX_PROFILES:
        if len(dims) != 2:
            raise RandLAError("matrix profiles need dims = (m, n)")
        m, n = dims
        if profile == "gaussian":
            return gaussian(m, n, seed, params.get("cond"), params.get("spectrum"))
        if profile == "coherent_spike":
            return coherent_spike(m, n, params.get("k", 1), seed, params.get("noise", 0.0))
        if profile == "low_rank_plus_noise":
            return low_rank_plus_noise(m, n, params.get("k", 5), params.get("eta", 0.0), seed,
                                       params.get("decay"))
        return power_law_leverage(m, n, params.get("alpha", 1.0), seed)
    if profile == "graph_random":
        return graph_random(dims[0], params.get("avg_degree", 8.0), seed,
                            params.get("wmin", 1.0), params.get("wmax", 1.0))
    if profile == "graph_path":
        return graph_path(dims[0], params.get("weight", 1.0))
    raise RandLAError(f"unknown profile {profile!r}")
