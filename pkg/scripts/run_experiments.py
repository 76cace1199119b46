"""Run registered experiments with their default configs and write reports.

    python3 scripts/run_experiments.py --out reports --trials 50
    python3 scripts/run_experiments.py --config scripts/configs/matmul_frobenius.yaml
"""
import argparse
import json
import time

from randla.experiments import REGISTRY, ExperimentConfig, emit_report, load_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", help="experiments to run (default: all)")
    ap.add_argument("--config", action="append", default=[], help="config file(s) to run instead")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="reports")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    args = ap.parse_args()

    if args.config:
        configs = [load_config(p) for p in args.config]
    else:
        names = args.names or sorted(REGISTRY)
        configs = [ExperimentConfig(n, trials=args.trials, seed=args.seed) for n in names]
    for cfg in configs:
        t0 = time.perf_counter()
        rep = run_experiment(cfg)
        path = emit_report(rep, args.format, args.out)
        agg = {k: v for k, v in rep.aggregates.items() if k.startswith(("mean_", "rate_", "success"))}
        print(f"{cfg.experiment:28s} {time.perf_counter() - t0:6.1f}s  {path}")
        print("    " + json.dumps(agg, sort_keys=True))


if __name__ == "__main__":
    main()
