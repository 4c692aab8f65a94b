"""Command-line entry point: ``udn-offload {run,scenario-dump,oracle-check}``."""

from __future__ import annotations

import argparse
import logging
import sys

from .kvconfig import ConfigError


def _cmd_run(args) -> int:
    from .harness import ExperimentPlan, run_experiment

    plan = ExperimentPlan.from_file(args.plan)
    out = args.out or plan.output_dir
    metrics, _ = run_experiment(plan, out_dir=out, workers=args.threads)
    for m in metrics:
        print(f"{m.sweep_variable}={m.sweep_value:g} {m.algorithm:5s} "
              f"energy={m.mean_total_energy:.4g} J delay={m.mean_total_delay:.4g} s "
              f"time_ok={m.time_support_ratio:.3f} cost_ok={m.cost_support_ratio:.3f} "
              f"F={m.mean_best_fitness:.4g}")
    print(f"wrote {out}/metrics.csv")
    return 0


def _cmd_dump(args) -> int:
    from .scenario import ScenarioConfig, dump_scenario_csv, generate_scenario

    cfg = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    paths = dump_scenario_csv(generate_scenario(cfg), args.out)
    for p in paths:
        print(p)
    return 0


def _cmd_oracle(args) -> int:
    from .oracle import oracle_check

    res = oracle_check(n_instances=args.instances, seed=args.seed, tol=args.tol)
    status = "PASS" if res.mismatches == 0 else "FAIL"
    print(f"{status}: {res.instances} instances, {res.points} decisions, "
          f"max relative error {res.max_rel_error:.3e}, mismatches {res.mismatches}")
    return 0 if res.mismatches == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="udn-offload", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment plan")
    p.add_argument("--plan", required=True, help="key=value plan file")
    p.add_argument("--out", help="output directory (overrides the plan's output_dir)")
    p.add_argument("--threads", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("scenario-dump", help="write a generated scenario as CSV tables")
    p.add_argument("--config", help="key=value scenario config (defaults if omitted)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dump)

    p = sub.add_parser("oracle-check", help="evaluator vs scalar reference on tiny instances")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
