"""Config-driven Monte Carlo experiments and their reports."""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.sparse.linalg import svds

from . import __version__
from .core import RandLAError, RngSeed, as_seed, range_basis, sample_indices
from .elementwise import quantize, sample_stream, sparsify, structural_error_check
from .generators import PROFILES, generate_matrix
from .laplacian import laplacian, solve_laplacian
from .leverage import leverage_exact, leverage_fast
from .lowrank import (cssp, cur_decompose, cx_decompose, linear_time_svd, linear_time_svd_bounds,
                      posterior_error_estimate, projection_residual, range_finder, select_columns,
                      structural_bound_check)
from .lstsq import blendenpik_preconditioner, check_conditions, lsqr, solve_exact, solve_sketched
from .matmul import approx_multiply, expected_sq_error, matmul_probs
from .sketch import embedding_check, make_sketch

TIMING_KEYS = ("wall_time",)
INSTANCE_STREAM = 2**63 + 1


@dataclass
class ExperimentConfig:
    experiment: str
    matrix_profile: str | None = None
    dims: tuple = ()
    params: dict = field(default_factory=dict)
    profile_params: dict = field(default_factory=dict)
    trials: int = 10
    seed: int = 0
    output: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise RandLAError(f"unknown config keys: {sorted(extra)}")
        d = dict(d)
        d["dims"] = tuple(int(x) for x in d.get("dims", ()))
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = list(self.dims)
        return d


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    if str(path).endswith((".yaml", ".yml")):
        import yaml
        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    return ExperimentConfig.from_dict(data)


# ---------------------------------------------------------------- registry

@dataclass(frozen=True)
class Experiment:
    name: str
    profile: str | None
    dims: tuple
    defaults: dict
    trial: Callable
    setup: Callable | None = None
    check: Callable | None = None
    description: str = ""


REGISTRY: dict[str, Experiment] = {}


def register(name, profile, dims, defaults, description="", setup=None, check=None):
    def deco(fn):
        REGISTRY[name] = Experiment(name, profile, tuple(dims), defaults, fn, setup, check, description)
        return fn
    return deco


def _frob_tail(s, k):
    return float(np.sqrt(np.sum(s[k:] ** 2)))


# matmul ---------------------------------------------------------------------

def _matmul_setup(cfg, P, g):
    m, n, p = cfg.dims
    A = generate_matrix(cfg.matrix_profile, (m, n), cfg.profile_params, g.child(0))
    B = generate_matrix(cfg.matrix_profile, (n, p), cfg.profile_params, g.child(1))
    if P.get("dominant_ratio"):
        A[:, 0] *= P["dominant_ratio"] * np.linalg.norm(A[:, 1:], axis=0).mean() / np.linalg.norm(A[:, 0])
    return {"A": A, "B": B, "probs": matmul_probs(A, B, P["probs"])}


@register("matmul_frobenius", "gaussian", (40, 30, 20), {"c": 10, "probs": "optimal"},
          "squared Frobenius error of sampled products vs. the closed form", _matmul_setup)
def _matmul_frobenius(P, data, seed):
    A, B, p = data["A"], data["B"], data["probs"]
    s = approx_multiply(A, B, P["c"], p, seed)
    return {"sq_error": float(np.linalg.norm(A @ B - s.product()) ** 2),
            "closed_form": expected_sq_error(A, B, p, P["c"]), "beta": s.beta}


@register("matmul_optimal_vs_uniform", "gaussian", (40, 30, 20), {"c": 10, "probs": "optimal",
                                                                    "dominant_ratio": 100.0},
          "optimal vs uniform probabilities on a dominant-column product", _matmul_setup)
def _matmul_opt_unif(P, data, seed):
    A, B = data["A"], data["B"]
    AB = A @ B
    so = approx_multiply(A, B, P["c"], matmul_probs(A, B, "optimal"), seed.child(0))
    su = approx_multiply(A, B, P["c"], matmul_probs(A, B, "uniform"), seed.child(1))
    return {"err_optimal": float(np.linalg.norm(AB - so.product()) ** 2),
            "err_uniform": float(np.linalg.norm(AB - su.product()) ** 2)}


# deterministic structural suite ---------------------------------------------

@register("structural_suite", None, (40,), {"k_max": 6, "slack": 1e-8},
          "deterministic low-rank and perturbation inequalities on random instances")
def _structural(P, data, seed):
    g = seed.generator()
    dmax = P["_dims"][0]
    m, n = (int(x) for x in g.integers(max(P["k_max"] + 2, 8), dmax + 1, 2))
    k = int(g.integers(1, P["k_max"] + 1))
    decay = g.uniform(0.5, 1.0)
    A = (g.standard_normal((m, n)) * decay ** np.arange(n)) * g.uniform(0.1, 10)
    slack = P["slack"]
    out = {"m": m, "n": n, "k": k}
    # column sampling with norm-squared probabilities
    c = int(g.integers(k, n + 1))
    res = linear_time_svd(A, c, k, seed=seed.child(1))
    b = linear_time_svd_bounds(A, res)
    out["lts_fro_slack"] = b["rhs_fro"] - b["lhs_fro"]
    out["lts_2_slack"] = b["rhs_2"] - b["lhs_2"]
    # main structural theorem with a Gaussian sketch
    ell = int(g.integers(k, min(n, k + 8) + 1))
    S = g.standard_normal((n, ell))
    for norm in ("frobenius", "spectral"):
        sb = structural_bound_check(A, S, k, norm)
        out[f"struct_{norm}_slack"] = sb.rhs - sb.lhs if sb.full_rank else float("inf")
    # perturbation lemma with a quantized matrix
    l2, r2, lF, rF = structural_error_check(A, quantize(A, seed.child(2)), k)
    out["am_2_slack"] = r2 - l2
    out["am_fro_slack"] = rF - lF
    out["success"] = all(v >= -slack for key, v in out.items() if key.endswith("_slack"))
    return out


# sketches and least squares -------------------------------------------------

def _instance(cfg, P, g):
    return {"A": generate_matrix(cfg.matrix_profile, cfg.dims, cfg.profile_params, g)}


@register("subspace_embedding", "gaussian", (2048, 10), {"r": 369, "kind": "srht", "eps": 0.5},
          "embedding defect of a sketch on a fixed subspace", _instance)
def _embedding(P, data, seed):
    U = range_basis(data["A"])
    op = make_sketch(P["kind"], U.shape[0], P["r"], seed)
    d = embedding_check(op, U)
    return {"defect": d, "success": d <= P["eps"]}


def _ls_setup(cfg, P, g):
    A = generate_matrix(cfg.matrix_profile, cfg.dims, cfg.profile_params, g.child(0))
    gg = g.child(1).generator()
    b = A @ gg.standard_normal(A.shape[1]) + P.get("noise", 1.0) * gg.standard_normal(A.shape[0])
    ex = solve_exact(A, b)
    return {"A": A, "b": b, "x_opt": ex.x, "Z": ex.residual_norm,
            "smin": np.linalg.svd(A, compute_uv=False)[-1]}


@register("sketched_ls", "gaussian", (2048, 10),
          {"strategy": "leverage_sample", "r": None, "eps": 0.5, "ratio_max": 1.5, "noise": 1.0},
          "sketch-and-solve objective ratio and the conditional structural bound", _ls_setup)
def _sketched_ls(P, data, seed):
    A, b, Z = data["A"], data["b"], data["Z"]
    d = A.shape[1]
    r = P["r"] or int(math.ceil(16 * d * math.log(d)))
    sol = solve_sketched(A, b, P["strategy"], r, seed, P["eps"])
    eps = P["eps"]
    smin_xu, cross = check_conditions(A, b, sol.sketch)
    cond_ok = smin_xu >= 1 / math.sqrt(2) and cross <= eps / 2 * Z**2
    err_x = float(np.linalg.norm(sol.x - data["x_opt"]))
    bound_res = (1 + eps) * Z
    bound_x = math.sqrt(eps) * Z / data["smin"]
    return {"ratio": sol.residual_norm / Z, "success": sol.residual_norm / Z <= P["ratio_max"],
            "conditions_hold": bool(cond_ok), "sigma_min_XU": smin_xu, "cross_term": cross,
            "residual_bound_ok": bool(sol.residual_norm <= bound_res * (1 + 1e-12)),
            "solution_bound_ok": bool(err_x <= bound_x * (1 + 1e-12) + 1e-14)}


def _blendenpik_setup(cfg, P, g):
    A = generate_matrix(cfg.matrix_profile, cfg.dims, cfg.profile_params, g.child(0))
    gg = g.child(1).generator()
    b = A @ gg.standard_normal(A.shape[1]) + 1e-3 * gg.standard_normal(A.shape[0])
    return {"A": A, "b": b}


@register("blendenpik", "gaussian", (4096, 50),
          {"gamma": 6.0, "tol": 1e-10, "max_iter": 100, "kappa_max": 3.0, "unpreconditioned": True},
          "Hadamard-sketch preconditioner quality and LSQR iteration counts", _blendenpik_setup)
def _blendenpik(P, data, seed):
    A, b = data["A"], data["b"]
    R, _ = blendenpik_preconditioner(A, P["gamma"], seed)
    kappa = float(np.linalg.cond(A @ np.linalg.inv(R)))
    sol = lsqr(A, b, R, P["tol"], P["max_iter"])
    out = {"kappa_precond": kappa, "iterations": sol.iterations, "converged": sol.success,
           "success": bool(kappa <= P["kappa_max"] and sol.success)}
    if P["unpreconditioned"]:
        plain = lsqr(A, b, None, P["tol"], P["max_iter"])
        out["plain_converged"] = plain.success
        out["plain_iterations"] = plain.iterations
    return out


@register("fast_leverage", "gaussian", (1024, 8), {"eps": 0.5, "factor": 4.0},
          "fast approximate leverage scores vs exact", None)
def _fast_leverage(P, data, seed):
    A = generate_matrix(P["_profile"], P["_dims"], P["_profile_params"], seed.child(0))
    ex = leverage_exact(A).scores
    ap = leverage_fast(A, P["eps"], seed.child(1)).scores
    err = float(np.max(np.abs(ap - ex) / ex))
    return {"max_rel_error": err, "success": err <= P["factor"] * P["eps"]}


# low rank -------------------------------------------------------------------

@register("multipass", "low_rank_plus_noise", (50, 80), {"c": 10, "t_max": 3},
          "multipass column selection residual per round", None)
def _multipass(P, data, seed):
    A = generate_matrix(P["_profile"], P["_dims"], P["_profile_params"], seed.child(0))
    s = np.linalg.svd(A, compute_uv=False)
    k = P["_profile_params"].get("k", 5)
    opt = float(np.sum(s[k:] ** 2))
    out = {}
    prev = np.inf
    mono = True
    for t in range(1, P["t_max"] + 1):
        C, _ = select_columns(A, P["c"], t, seed.child(1))
        res = projection_residual(A, C) ** 2
        out[f"additive_error_t{t}"] = float(res - opt)
        mono &= res <= prev * (1 + 1e-12) + 1e-12
        prev = res
    out["monotone"] = bool(mono)
    return out


@register("cx_cur_exact", "low_rank_plus_noise", (60, 80), {"k": 5, "eps": 0.5, "tol": 1e-7},
          "CX and CUR residuals on exactly rank-k inputs", None)
def _cx_cur(P, data, seed):
    A = generate_matrix(P["_profile"], P["_dims"], {**P["_profile_params"], "eta": 0.0,
                                                   "k": P["k"]}, seed.child(0))
    nA = np.linalg.norm(A)
    cx = cx_decompose(A, P["k"], P["eps"], seed.child(1))
    cur = cur_decompose(A, P["k"], P["eps"], "strong", seed.child(2))
    cs = cssp(A, P["k"], seed.child(3))
    r_cx = cx.residual / nA
    r_cur = float(np.linalg.norm(A - cur.product()) / nA)
    r_cssp = projection_residual(A, cs.C) / nA
    return {"cx_rel_residual": r_cx, "cur_rel_residual": r_cur, "cssp_rel_residual": r_cssp,
            "success": bool(max(r_cx, r_cur) <= P["tol"])}


def _spectrum_setup(cfg, P, g):
    return {"A": generate_matrix(cfg.matrix_profile, cfg.dims, cfg.profile_params, g)}


@register("range_finder_oversampling", "low_rank_plus_noise", (100, 80), {"k": 5, "p": 10, "q": 0},
          "Frobenius error of the Gaussian range finder vs. the oversampling bound", _spectrum_setup)
def _range_finder(P, data, seed):
    A = data["A"]
    k, p = P["k"], P["p"]
    s = np.linalg.svd(A, compute_uv=False)
    Q = range_finder(A, k, p, P["q"], seed).Q
    err = float(np.linalg.norm(A - Q @ (Q.T @ A)))
    out = {"error_fro": err, "error_2": float(np.linalg.norm(A - Q @ (Q.T @ A), 2)),
           "sigma_k1": float(s[k])}
    if p >= 2:
        out["bound_fro"] = math.sqrt(1 + k / (p - 1)) * _frob_tail(s, k)
    return out


@register("power_iteration", "gaussian", (100, 80), {"k": 5, "p": 5, "q_max": 2},
          "spectral error ratio of the range finder for increasing power steps", _spectrum_setup)
def _power(P, data, seed):
    A = data["A"]
    k = P["k"]
    s = np.linalg.svd(A, compute_uv=False)
    out = {}
    prev = np.inf
    mono = True
    for q in range(P["q_max"] + 1):
        Q = range_finder(A, k, P["p"], q, seed).Q
        e = float(np.linalg.norm(A - Q @ (Q.T @ A), 2) / s[k])
        out[f"ratio_q{q}"] = e
        mono &= e <= prev + 1e-10
        prev = e
    out["monotone"] = bool(mono)
    return out


@register("posterior_estimator", "low_rank_plus_noise", (60, 50), {"r": 10, "k_max": 10},
          "posterior error estimate vs the true spectral error", None)
def _posterior(P, data, seed):
    g = seed.generator()
    k = int(g.integers(1, P["k_max"] + 1))
    A = generate_matrix(P["_profile"], P["_dims"], {"k": P["k_max"], "eta": 0.05,
                                                    **P["_profile_params"]}, seed.child(0))
    Q = range_finder(A, k, 0, 0, seed.child(1)).Q
    true = float(np.linalg.norm(A - Q @ (Q.T @ A), 2))
    est = posterior_error_estimate(A, Q, P["r"], seed.child(2))
    return {"estimate": est, "true_error": true, "success": est >= true}


# JL, elementwise, laplacian ---------------------------------------------------

@register("jl_lemma", "gaussian", (100, 50), {"eps": 0.3, "kind": "gaussian"},
          "all-pairs distance preservation of a Gaussian projection", _instance)
def _jl(P, data, seed):
    X = data["A"]  # n points in R^d as rows
    n, d = X.shape
    eps = P["eps"]
    k = int(math.ceil(9 * math.log(n) / (eps**2 - eps**3)))
    Y = make_sketch(P["kind"], d, k, seed).matrix() @ X.T
    i, j = np.triu_indices(n, 1)
    D0 = np.sum((X.T[:, i] - X.T[:, j]) ** 2, axis=0)
    D1 = np.sum((Y[:, i] - Y[:, j]) ** 2, axis=0)
    ratio = D1 / D0
    return {"k": k, "min_ratio": float(ratio.min()), "max_ratio": float(ratio.max()),
            "success": bool(np.all((ratio >= 1 - eps) & (ratio <= 1 + eps)))}


def _quant_setup(cfg, P, g):
    n = cfg.dims[0]
    return {"A": g.generator().uniform(-1, 1, (n, n))}


@register("quantization", None, (1024,), {"factor": 4.0}, "spectral norm of quantization noise",
          _quant_setup)
def _quant(P, data, seed):
    A = data["A"]
    n = A.shape[0]
    Ah = quantize(A, seed)
    b = Ah.b
    N = float(svds(A - Ah.to_dense(), k=1, return_singular_vectors=False, random_state=0)[0])
    return {"noise_ratio": float(N / (b * math.sqrt(n))), "success": N <= P["factor"] * b * math.sqrt(n)}


def _stream_setup(cfg, P, g):
    m = cfg.dims[0]
    gg = g.generator()
    A = np.exp(gg.uniform(np.log(1e-4), 0, (m, m))) * gg.choice([-1.0, 1.0], (m, m))
    return {"A": A}


@register("stream_vs_direct", None, (64,), {"s": 50.0},
          "kept counts of the one-pass sampler and direct magnitude sampling", _stream_setup)
def _stream(P, data, seed):
    A = data["A"]
    n = max(A.shape)
    ii, jj = np.indices(A.shape).reshape(2, -1)
    st = sample_stream(zip(ii, jj, A.ravel()), P["s"], n, seed.child(0), A.shape)
    b = np.max(np.abs(A))
    p = P["s"] * b**2 / np.sum(A * A)
    dr = sparsify(A, min(p, 1.0), "magnitude", seed.child(1))
    return {"stream_kept": st.nnz, "direct_kept": dr.nnz, "direct_expected": dr.expected_nnz}


def _graph_setup(cfg, P, g):
    G = generate_matrix(cfg.matrix_profile, cfg.dims, cfg.profile_params, g)
    return {"G": G}


@register("laplacian_solve", "graph_random", (200,), {"eps": 0.5, "mode": "direct_on_sketch",
                                                      "max_iter_factor": 3.0},
          "L-norm error of sparsify-and-solve and PCG iteration counts", None)
def _lap(P, data, seed):
    G = generate_matrix(P["_profile"], P["_dims"], {"avg_degree": 10.0, "wmin": 1.0, "wmax": 10.0,
                                                   **P["_profile_params"]}, seed.child(0))
    n = G.n
    L = laplacian(G)
    b = seed.child(1).generator().standard_normal(n)
    b -= b.mean()
    J = np.full((n, n), 1.0 / n)
    x = np.linalg.solve(L + J, b)
    x -= x.mean()
    res = solve_laplacian(G, b, P["eps"], P["mode"], seed.child(2))
    e = res.x - x
    rel = float(np.sqrt(e @ L @ e) / np.sqrt(x @ L @ x))
    out = {"l_norm_rel_error": rel, "iterations": res.iterations,
           "sparsifier_edges": res.sparsifier_edge_count, "connected_sparsifier": res.connected_sparsifier}
    if P["mode"] == "direct_on_sketch":
        out["success"] = rel <= P["eps"]
    else:
        out["success"] = bool(res.l_norm_error_estimate <= 1e-10
                              and res.iterations <= P["max_iter_factor"] * math.sqrt(n))
    return out


# ----------------------------------------------------------------- running

def _params(cfg: ExperimentConfig, exp: Experiment) -> dict:
    P = {**exp.defaults, **cfg.params}
    unknown = set(cfg.params) - set(exp.defaults)
    if unknown:
        raise RandLAError(f"unknown parameters for {exp.name}: {sorted(unknown)}")
    P["_dims"] = cfg.dims
    P["_profile"] = cfg.matrix_profile
    P["_profile_params"] = dict(cfg.profile_params)
    return P


_RANGES = {"k": (1, None), "c": (1, None), "r": (1, None), "t_max": (1, None), "q": (0, None),
           "q_max": (0, None), "p": (0, None), "eps": (1e-300, 1.0), "gamma": (1.5, None),
           "s": (1e-300, None), "k_max": (1, None), "max_iter": (1, None), "tol": (1e-300, None)}


def validate_config(cfg: ExperimentConfig) -> tuple[Experiment, ExperimentConfig, dict]:
    """Fill defaults and check every precondition before any trial runs."""
    exp = REGISTRY.get(cfg.experiment)
    if exp is None:
        raise RandLAError(f"unknown experiment {cfg.experiment!r}; known: {sorted(REGISTRY)}")
    if cfg.matrix_profile is None:
        cfg = ExperimentConfig(**{**cfg.to_dict(), "matrix_profile": exp.profile, "dims": tuple(cfg.dims)})
    if not cfg.dims:
        cfg = ExperimentConfig(**{**cfg.to_dict(), "dims": exp.dims})
    if cfg.matrix_profile is not None and cfg.matrix_profile not in PROFILES:
        raise RandLAError(f"unknown matrix profile {cfg.matrix_profile!r}")
    if len(cfg.dims) != len(exp.dims) or any(int(d) < 1 for d in cfg.dims):
        raise RandLAError(f"{exp.name} expects {len(exp.dims)} positive dimensions")
    if cfg.trials < 0:
        raise RandLAError("trials must be >= 0")
    as_seed(cfg.seed)
    P = _params(cfg, exp)
    for key, (lo, hi) in _RANGES.items():
        v = P.get(key)
        if v is None:
            continue
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise RandLAError(f"parameter {key}={v!r} outside [{lo}, {hi}]")
    d = cfg.dims
    if "k" in P and len(d) >= 2 and P["k"] > min(d[:2]):
        raise RandLAError("k exceeds min(m, n)")
    if exp.name == "range_finder_oversampling" and P["k"] + P["p"] > min(d):
        raise RandLAError("k + p exceeds min(m, n)")
    if exp.name == "blendenpik" and d[0] < 4 * d[1]:
        raise RandLAError("blendenpik needs m >= 4 n")
    if exp.name == "fast_leverage" and (d[0] < 4 * d[1] or P["eps"] > 0.5):
        raise RandLAError("fast leverage needs m >= 4 n and eps <= 1/2")
    if exp.name == "sketched_ls" and P["r"] is not None and P["r"] < d[1]:
        raise RandLAError("sketch size must be at least n")
    if exp.check is not None:
        exp.check(cfg, P)
    return exp, cfg, P


def _clean(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def aggregate(trials: list[dict]) -> dict:
    """Mean, median, std and 3-sigma band of numeric fields; rates of boolean fields."""
    ok = [t for t in trials if not t.get("failed")]
    out: dict = {"n_trials": len(trials), "n_failed": len(trials) - len(ok)}
    keys = sorted({k for t in ok for k in t} - {"trial", "failed", "error"} - set(TIMING_KEYS))
    for key in keys:
        vals = [t.get(key) for t in ok if t.get(key) is not None]
        if not vals:
            continue
        if all(isinstance(v, bool) for v in vals):
            out[f"rate_{key}"] = sum(vals) / len(vals)
            continue
        if not all(isinstance(v, (int, float)) for v in vals):
            continue
        x = np.asarray(vals, dtype=float)
        sem = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        mean = float(x.mean())
        out[f"mean_{key}"] = mean
        out[f"median_{key}"] = float(np.median(x))
        out[f"std_{key}"] = float(x.std(ddof=1)) if x.size > 1 else 0.0
        out[f"band3_{key}"] = [mean - 3 * sem, mean + 3 * sem]
    if ok and "success" in ok[0]:
        out["success_rate"] = out.get("rate_success", 0.0)
    else:
        out["success_rate"] = len(ok) / len(trials) if trials else None
    return out


@dataclass
class ExperimentReport:
    config: dict
    trials: list
    aggregates: dict
    version: str = __version__

    def to_dict(self, timing: bool = True) -> dict:
        trials = self.trials if timing else [{k: v for k, v in t.items() if k not in TIMING_KEYS}
                                             for t in self.trials]
        return {"config": self.config, "trials": trials, "aggregates": self.aggregates,
                "version": self.version}

    def body(self) -> str:
        """Canonical JSON without wall-clock fields (deterministic under a fixed config)."""
        return json.dumps(self.to_dict(timing=False), sort_keys=True)

    def column(self, key: str) -> np.ndarray:
        return np.array([t.get(key) for t in self.trials if not t.get("failed")], dtype=object)

    def values(self, key: str) -> np.ndarray:
        return np.array([t[key] for t in self.trials if not t.get("failed") and t.get(key) is not None],
                        dtype=float)

    @classmethod
    def from_dict(cls, d: dict, check: bool = True) -> "ExperimentReport":
        rep = cls(d["config"], d["trials"], d["aggregates"], d.get("version", __version__))
        if check:
            fresh = json.loads(json.dumps(aggregate(rep.trials)))
            if not _close(fresh, rep.aggregates):
                raise RandLAError("report aggregates do not match its trial records")
        return rep

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _close(a, b, rtol=1e-12) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k]) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_close(x, y) for x, y in zip(a, b))
    if isinstance(a, float) or isinstance(b, float):
        if a is None or b is None:
            return a is b
        return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))
    return a == b


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RANDLA_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Validate, build the shared instance, and run all trials.

    Trial i uses the stream ``RngSeed(cfg.seed, i)``; a failing trial is
    recorded with its error message and the run continues.
    """
    exp, cfg, P = validate_config(cfg)
    data = {}
    if cfg.trials and exp.setup is not None:
        data = exp.setup(cfg, P, RngSeed(cfg.seed, INSTANCE_STREAM))

    def one(i):
        t0 = time.perf_counter()
        try:
            rec = {k: _clean(v) for k, v in exp.trial(P, data, RngSeed(cfg.seed, i)).items()}
        except Exception as e:  # noqa: BLE001 - failures are data here
            rec = {"failed": True, "error": f"{type(e).__name__}: {e}"}
        return {"trial": i, **rec, "wall_time": time.perf_counter() - t0}

    workers = min(_threads(), max(cfg.trials, 1))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            trials = list(pool.map(one, range(cfg.trials)))
    else:
        trials = [one(i) for i in range(cfg.trials)]
    return ExperimentReport(cfg.to_dict(), trials, json.loads(json.dumps(aggregate(trials))))


def emit_report(report: ExperimentReport, format: str = "json", out=".") -> Path:
    """Write ``<experiment>.json`` or ``<experiment>.csv`` into directory ``out``."""
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise RandLAError(f"cannot create output directory {out}: {e}") from e
    name = report.config.get("experiment", "report")
    path = out / f"{name}.{format}"
    try:
        if format == "json":
            path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        elif format == "csv":
            keys = sorted({k for t in report.trials for k in t} - {"trial"})
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["trial"] + keys)
                for t in report.trials:
                    w.writerow([t["trial"]] + ["" if t.get(k) is None else t.get(k) for k in keys])
        else:
            raise RandLAError(f"unknown report format {format!r}")
    except OSError as e:
        raise RandLAError(f"cannot write report {path}: {e}") from e
    return path
