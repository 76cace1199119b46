"""Command line entry point: ``randla <experiment>``, ``randla gen``, ``randla solve``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import RandLAError
from .experiments import REGISTRY, ExperimentConfig, emit_report, load_config, run_experiment
from .generators import GRAPH_PROFILES, PROFILES, generate_matrix
from .io import matrix_io, read_edge_list, read_matrix_market
from .laplacian import WeightedGraph, solve_laplacian
from .lstsq import lsqr, solve_exact, solve_precond, solve_sketched

SOLVE_METHODS = ("exact", "srht", "gaussian", "leverage_sample", "uniform_sample",
                 "fast_leverage_sample", "precond", "lsqr", "laplacian_direct", "laplacian_cg")


def _kv(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise RandLAError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _experiment_parser(sub, name, help_):
    p = sub.add_parser(name, help=help_)
    p.add_argument("--config", help="JSON or YAML experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="algorithm parameter")
    p.add_argument("--profile", choices=PROFILES)
    p.add_argument("--dims", type=int, nargs="+")
    p.set_defaults(experiment=name)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="randla", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list registered experiments")
    for name, exp in sorted(REGISTRY.items()):
        _experiment_parser(sub, name, exp.description)

    g = sub.add_parser("gen", help="generate a synthetic matrix or graph")
    g.add_argument("--profile", choices=PROFILES, required=True)
    g.add_argument("--dims", type=int, nargs="+", required=True)
    g.add_argument("--param", action="append", metavar="KEY=VALUE")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--format", choices=("matrix_market_array", "matrix_market_coordinate", "edge_list"))

    s = sub.add_parser("solve", help="solve a least-squares or Laplacian system from files")
    s.add_argument("--matrix", help="Matrix Market file (A, or a graph Laplacian)")
    s.add_argument("--graph", help="edge-list file (Laplacian methods)")
    s.add_argument("--rhs", required=True, help="right-hand side: whitespace separated values or Matrix Market")
    s.add_argument("--method", choices=SOLVE_METHODS, default="exact")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--r", type=int)
    s.add_argument("--gamma", type=float, default=6.0)
    s.add_argument("--tol", type=float, default=1e-14)
    s.add_argument("--out", help="write the solution vector here")
    return ap


def _read_vector(path) -> np.ndarray:
    text = Path(path).read_text()
    if text.startswith("%%MatrixMarket"):
        return read_matrix_market(path).ravel()
    try:
        return np.array([float(t) for t in text.split()])
    except ValueError as e:
        raise RandLAError(f"{path}: right-hand side must be whitespace separated numbers") from e


def _graph_from_laplacian(L: np.ndarray) -> WeightedGraph:
    n = L.shape[0]
    iu, ju = np.triu_indices(n, 1)
    w = -L[iu, ju]
    keep = w > 0
    return WeightedGraph(n, iu[keep], ju[keep], w[keep])


def _cmd_experiment(args) -> int:
    base = load_config(args.config).to_dict() if args.config else {"experiment": args.experiment}
    base["experiment"] = args.experiment
    if args.seed is not None:
        base["seed"] = args.seed
    if args.trials is not None:
        base["trials"] = args.trials
    if args.profile:
        base["matrix_profile"] = args.profile
    if args.dims:
        base["dims"] = args.dims
    base["params"] = {**base.get("params", {}), **_kv(args.param)}
    base["output"] = args.out
    report = run_experiment(ExperimentConfig.from_dict(base))
    path = emit_report(report, args.format, args.out)
    print(json.dumps({"report": str(path), **report.aggregates}, indent=2, sort_keys=True))
    return 0


def _cmd_gen(args) -> int:
    obj = generate_matrix(args.profile, args.dims, _kv(args.param), args.seed)
    fmt = args.format or ("edge_list" if args.profile in GRAPH_PROFILES else "matrix_market_array")
    if (fmt == "edge_list") != isinstance(obj, WeightedGraph):
        raise RandLAError(f"format {fmt} does not fit profile {args.profile}")
    matrix_io(args.out, "write", fmt, obj)
    print(args.out)
    return 0


def _cmd_solve(args) -> int:
    b = _read_vector(args.rhs)
    m = args.method
    if m.startswith("laplacian"):
        if args.graph:
            G = read_edge_list(args.graph, n=b.size)
        elif args.matrix:
            G = _graph_from_laplacian(read_matrix_market(args.matrix))
        else:
            raise RandLAError("laplacian methods need --graph or --matrix")
        mode = "direct_on_sketch" if m == "laplacian_direct" else "preconditioned_cg"
        res = solve_laplacian(G, b, args.eps, mode, args.seed)
        x, info = res.x, {"iterations": res.iterations, "sparsifier_edges": res.sparsifier_edge_count}
    else:
        if not args.matrix:
            raise RandLAError("--matrix is required")
        A = read_matrix_market(args.matrix)
        if m == "exact":
            sol = solve_exact(A, b)
        elif m == "precond":
            sol = solve_precond(A, b, args.gamma, args.tol, args.seed)
        elif m == "lsqr":
            sol = lsqr(A, b, None, args.tol)
        else:
            sol = solve_sketched(A, b, m, args.r, args.seed, args.eps)
        x = sol.x
        info = {"residual_norm": sol.residual_norm, "iterations": sol.iterations,
                "success": sol.success, "method": sol.method}
    if args.out:
        Path(args.out).write_text("\n".join(repr(float(v)) for v in x) + "\n")
    print(json.dumps(info, sort_keys=True))
    if not args.out:
        print(" ".join(repr(float(v)) for v in x))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for name, exp in sorted(REGISTRY.items()):
                print(f"{name:28s} {exp.description}")
            return 0
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "solve":
            return _cmd_solve(args)
        return _cmd_experiment(args)
    except (RandLAError, OSError) as e:
        print(f"randla: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
