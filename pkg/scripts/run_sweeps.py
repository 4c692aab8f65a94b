#!/usr/bin/env python3
"""Run the load and spectrum-partition sweeps and print the headline tables.

    python3 scripts/run_sweeps.py --threads 4
    python3 scripts/run_sweeps.py --plans plans/smoke.plan

Each plan writes metrics.csv, runs.csv, timing.csv and traces/ under its
output_dir (or under --out/<plan name> when --out is given).
"""

from __future__ import annotations

import argparse
from pathlib import Path

from udn_offload.harness import ExperimentPlan, run_experiment

ROOT = Path(__file__).resolve().parent.parent
DEFAULT_PLANS = [ROOT / "plans" / "imds_sweep.plan", ROOT / "plans" / "eta_sweep.plan"]


def print_table(plan: ExperimentPlan, metrics) -> None:
    print(f"\n{plan.sweep_variable:>16} {'alg':>5} {'energy J':>10} {'delay s':>9} "
          f"{'t_ok':>6} {'c_ok':>6} {'fitness':>12} {'wall s':>7}")
    for m in metrics:
        print(f"{m.sweep_value:>16g} {m.algorithm:>5} {m.mean_total_energy:>10.2f} "
              f"{m.mean_total_delay:>9.2f} {m.time_support_ratio:>6.3f} "
              f"{m.cost_support_ratio:>6.3f} {m.mean_best_fitness:>12.4g} "
              f"{m.mean_wall_time:>7.2f}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--plans", nargs="+", type=Path, default=DEFAULT_PLANS)
    ap.add_argument("--out", type=Path, help="root directory for all plan outputs")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    for path in args.plans:
        plan = ExperimentPlan.from_file(path)
        out = args.out / path.stem if args.out else Path(plan.output_dir)
        metrics, _ = run_experiment(plan, out, workers=args.threads)
        print(f"\n== {path.name} -> {out}")
        print_table(plan, metrics)


if __name__ == "__main__":
    main()
