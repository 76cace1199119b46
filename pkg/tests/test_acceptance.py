"""Acceptance criteria 1-15 at their stated sizes and tolerances.

Each test records one PASS/FAIL line that the conftest prints at the end of
the session. Run directly with ``python3 tests/test_acceptance.py``.
"""
import math
import sys

import numpy as np
import pytest
from scipy import stats

from randla import RngSeed
from randla.experiments import INSTANCE_STREAM, ExperimentConfig, run_experiment
from randla.generators import generate_matrix, graph_random
from randla.laplacian import WeightedGraph, effective_resistances, edge_incidence, laplacian
from randla.matmul import approx_multiply, matmul_probs

pytestmark = pytest.mark.acceptance


def run(name, trials, seed=0, **kw):
    rep = run_experiment(ExperimentConfig(name, trials=trials, seed=seed, **kw))
    assert rep.aggregates["n_failed"] == 0, [t["error"] for t in rep.trials if t.get("failed")][:3]
    return rep


# 1, 2 ---------------------------------------------------------------------

def _matmul_instance():
    g = RngSeed(7, 0).generator()
    return g.standard_normal((40, 30)), g.standard_normal((30, 20))


def test_ac01_matmul_expectation_identity(criterion):
    rep = run("matmul_frobenius", 20000)
    # rebuild the experiment's shared instance and evaluate the closed form independently
    g = RngSeed(0, INSTANCE_STREAM)
    A = generate_matrix("gaussian", (40, 30), {}, g.child(0))
    B = generate_matrix("gaussian", (30, 20), {}, g.child(1))
    c = 10
    w = np.linalg.norm(A, axis=0) * np.linalg.norm(B, axis=1)
    oracle = (w.sum() ** 2 - np.linalg.norm(A @ B) ** 2) / c
    mean = rep.aggregates["mean_sq_error"]
    rel = abs(mean - oracle) / oracle
    assert criterion(1, "matmul E||AB-CR||_F^2", rel <= 0.03, f"rel dev {rel:.4f} (limit 0.03)")


def test_ac02_matmul_entrywise_unbiased(criterion):
    A, B = _matmul_instance()
    c, T = 10, 20000
    p = matmul_probs(A, B, "optimal")
    total = np.zeros((40, 20))
    for t in range(T):
        total += approx_multiply(A, B, c, p, RngSeed(2, t)).product()
    mean = total / T
    AB = A @ B
    # per-entry variance of one estimate: (1/c)(sum_k A_ik^2 B_kj^2 / p_k - AB_ij^2)
    var = ((A**2 / p) @ B**2 - AB**2) / c
    z = (mean - AB) / np.sqrt(var / T)
    # every entry is tested at 3 sigma; the count of exceedances is binomial
    N, q = z.size, 2 * stats.norm.sf(3.0)
    out = int(np.sum(np.abs(z) > 3))
    limit = N * q + 3 * math.sqrt(N * q * (1 - q))
    assert criterion(2, "matmul entrywise unbiasedness", out <= limit,
                     f"{out}/{N} entries beyond 3 sigma (binomial 3-sigma limit {limit:.1f}); "
                     f"max |z| {np.abs(z).max():.2f}")


# 3 ------------------------------------------------------------------------

def test_ac03_optimal_beats_uniform(criterion):
    rep = run("matmul_optimal_vs_uniform", 10000)
    eo, eu = rep.values("err_optimal"), rep.values("err_uniform")
    diff = eu.mean() - eo.mean()
    se = math.sqrt(eo.var(ddof=1) / eo.size + eu.var(ddof=1) / eu.size)
    assert criterion(3, "optimal vs uniform probabilities", diff > 3 * se,
                     f"mean uniform - optimal = {diff:.3g}, {diff / se:.1f} standard errors")


# 4 ------------------------------------------------------------------------

def test_ac04_structural_suite(criterion):
    rep = run("structural_suite", 1000)
    keys = [k for k in rep.trials[0] if k.endswith("_slack")]
    worst = {k: float(np.min(rep.values(k))) for k in keys}
    ok = all(v >= -1e-8 for v in worst.values()) and rep.aggregates["success_rate"] == 1.0
    detail = ", ".join(f"{k[:-6]} {v:.2e}" for k, v in worst.items())
    assert criterion(4, "deterministic structural suite", ok, f"min slacks: {detail}")


# 5-8 ----------------------------------------------------------------------

def test_ac05_subspace_embedding(criterion):
    r = math.ceil(160 * math.log(10))
    rep = run("subspace_embedding", 100, params={"r": r})
    n = int(rep.values("success").sum())
    assert criterion(5, "SRHT subspace embedding", n >= 95,
                     f"{n}/100 seeds with defect <= 0.5 (r={r}, worst {rep.values('defect').max():.3f})")


def test_ac06_sketched_least_squares(criterion):
    rep = run("sketched_ls", 100)
    n = int(rep.values("success").sum())
    cond = [t for t in rep.trials if t["conditions_hold"]]
    cond_ok = all(t["residual_bound_ok"] and t["solution_bound_ok"] for t in cond)
    ok = n >= 90 and cond_ok
    assert criterion(6, "sketched least squares", ok,
                     f"{n}/100 with ratio <= 1.5; {len(cond)} realizations meet the conditions, "
                     f"all within bounds: {cond_ok}")


def test_ac07_blendenpik(criterion):
    rep = run("blendenpik", 100, profile_params={"cond": 1e6})
    n_pre = int(rep.values("success").sum())
    n_plain_fail = int(sum(not t["plain_converged"] for t in rep.trials))
    ok = n_pre >= 95 and n_plain_fail >= 95
    assert criterion(7, "Hadamard-sketch preconditioned LSQR", ok,
                     f"preconditioned {n_pre}/100 (max kappa {rep.values('kappa_precond').max():.2f}, "
                     f"max iters {int(rep.values('iterations').max())}); plain LSQR fails {n_plain_fail}/100")


def test_ac08_fast_leverage(criterion):
    rep = run("fast_leverage", 100)
    n = int(rep.values("success").sum())
    assert criterion(8, "fast leverage scores", n >= 90,
                     f"{n}/100 with max rel error <= 2.0 (worst {rep.values('max_rel_error').max():.3f})")


# 9-12 ---------------------------------------------------------------------

def test_ac09_multipass(criterion):
    # c = 10 per round keeps t*c below m = 50 so the span never saturates
    rep = run("multipass", 50, params={"c": 10}, profile_params={"k": 5, "eta": 0.01})
    med = [float(np.median(rep.values(f"additive_error_t{t}"))) for t in (1, 2, 3)]
    mono = rep.aggregates["rate_monotone"]
    ok = mono == 1.0 and med[0] > med[1] > med[2]
    assert criterion(9, "multipass column selection", ok,
                     f"monotone rate {mono:.2f}; median additive error " + " > ".join(f"{m:.4g}" for m in med))


def test_ac10_cx_cur_exact(criterion):
    rep = run("cx_cur_exact", 100)
    n = int(rep.values("success").sum())
    assert criterion(10, "CX/CUR exact recovery", n >= 90,
                     f"{n}/100 with residual <= 1e-7 ||A||_F (worst CX "
                     f"{rep.values('cx_rel_residual').max():.1e}, CUR {rep.values('cur_rel_residual').max():.1e})")


def test_ac11_range_finder(criterion):
    parts, ok = [], True
    for p in (2, 10):
        rep = run("range_finder_oversampling", 200, params={"p": p}, profile_params={"k": 5, "eta": 0.1})
        mean, bound = rep.aggregates["mean_error_fro"], rep.values("bound_fro")[0]
        ok &= mean <= bound
        parts.append(f"p={p}: mean/bound {mean / bound:.3f}")
    spectrum = [1.0] * 5 + [0.5] * 75
    rep = run("power_iteration", 200, profile_params={"spectrum": spectrum})
    med = [float(np.median(rep.values(f"ratio_q{q}"))) for q in range(3)]
    ok &= med[0] >= med[1] >= med[2]
    parts.append("power medians " + " >= ".join(f"{m:.4f}" for m in med))
    assert criterion(11, "range finder oversampling and power steps", ok, "; ".join(parts))


def test_ac12_posterior_estimator(criterion):
    rep = run("posterior_estimator", 500)
    rate = rep.aggregates["success_rate"]
    assert criterion(12, "posterior error estimator", rate >= 0.99, f"estimate >= true error in {rate:.3f}")


# 13-15 --------------------------------------------------------------------

def test_ac13_jl(criterion):
    rep = run("jl_lemma", 100)
    n = int(rep.values("success").sum())
    k = int(rep.values("k")[0])
    assert criterion(13, "Johnson-Lindenstrauss", n >= 40, f"{n}/100 trials preserve all pairs (k={k})")


def test_ac14_quantization_and_stream(criterion):
    rep = run("quantization", 100)
    n = int(rep.values("success").sum())
    st = run("stream_vs_direct", 500)
    ks = stats.ks_2samp(st.values("stream_kept"), st.values("direct_kept"))
    ok = n >= 95 and ks.pvalue > 1e-3
    assert criterion(14, "quantization floor and streaming sampler", ok,
                     f"{n}/100 with ||A-A_hat||_2 <= 4 b sqrt(n) (max ratio "
                     f"{rep.values('noise_ratio').max():.3f}); KS p = {ks.pvalue:.3g}")


def test_ac15_laplacian(criterion):
    tri = WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    B, _ = edge_incidence(tri)
    oracle = np.einsum("ij,jk,ik->i", B, np.linalg.pinv(laplacian(tri)), B)
    tri_err = float(np.max(np.abs(effective_resistances(tri) - 2 / 3)))
    tri_ok = tri_err <= 1e-8 and np.allclose(oracle, 2 / 3, atol=1e-8)
    sum_err = 0.0
    for s in range(100):
        G = graph_random(int(10 + s % 40), 4.0, RngSeed(15, s), 0.5, 5.0)
        sum_err = max(sum_err, abs(np.sum(G.w * effective_resistances(G)) - (G.n - 1)))
    direct = run("laplacian_solve", 100)
    n_dir = int(direct.values("success").sum())
    pcg = run("laplacian_solve", 100, params={"mode": "preconditioned_cg"})
    n_cg = int(pcg.values("success").sum())
    ok = tri_ok and sum_err <= 1e-8 and n_dir >= 90 and n_cg >= 90
    assert criterion(15, "Laplacian suite", ok,
                     f"triangle err {tri_err:.1e}; max |sum w R - (n-1)| {sum_err:.1e}; "
                     f"direct {n_dir}/100; PCG {n_cg}/100 within {3 * math.sqrt(200):.1f} iterations "
                     f"(max {int(pcg.values('iterations').max())})")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-rA"]))
