#!/usr/bin/env python3
"""Average IWOA and WOA convergence traces over seeds.

Reads ``traces/`` written by the harness and emits one CSV with the mean and
median best fitness per iteration for every (sweep value, algorithm):

    python3 scripts/convergence.py results/imds_sweep --out convergence.csv
"""

from __future__ import annotations

import argparse
import csv
import re
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

PATTERN = re.compile(r"trace_(?P<var>[a-z_]+)-(?P<value>[^_]+)_seed(?P<seed>\d+)_(?P<alg>\w+)\.csv")


def load(results: Path):
    groups = defaultdict(list)
    for path in sorted((results / "traces").glob("trace_*.csv")):
        m = PATTERN.fullmatch(path.name)
        if m is None:
            continue
        data = np.genfromtxt(path, delimiter=",", names=True)
        groups[(m["var"], float(m["value"]), m["alg"])].append(data["best_fitness"])
    return groups


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("results", type=Path)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    groups = load(args.results)
    if not groups:
        sys.exit(f"no traces under {args.results / 'traces'}")
    fh = args.out.open("w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["sweep_variable", "sweep_value", "algorithm", "iteration", "n_seeds",
                "mean_best_fitness", "median_best_fitness"])
    for (var, value, alg), traces in sorted(groups.items()):
        stack = np.vstack(traces)
        for t in range(stack.shape[1]):
            w.writerow([var, value, alg, t + 1, len(traces), repr(float(stack[:, t].mean())),
                        repr(float(np.median(stack[:, t])))])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
