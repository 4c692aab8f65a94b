"""Experiment driver: seed batches over parameter sweeps, metrics and traces as CSV.

Output layout under the plan's output directory::

    metrics.csv   one row per (sweep value, algorithm), averaged over seeds
    runs.csv      one row per (sweep value, seed, algorithm)
    timing.csv    mean wall time per (sweep value, algorithm)
    traces/trace_<variable>-<value>_seed<seed>_<algorithm>.csv
                  per-iteration best-so-far for IWOA/WOA runs

``metrics.csv``, ``runs.csv`` and the traces depend only on the plan; wall-clock
numbers are kept apart in ``timing.csv`` so those files are reproducible
byte-for-byte.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import baselines
from .evaluator import EvaluationReport, evaluate
from .kvconfig import ConfigError, coerce_fields, read_kv
from .optimizer import OptimizerParams, run
from .scenario import ScenarioConfig, generate_scenario

log = logging.getLogger(__name__)

ALGORITHMS = ("IWOA", "WOA", "CMT", "CMS")
SWEEP_VARIABLES = ("num_imds", "partition_factor")

METRICS_COLUMNS = (
    "sweep_variable", "sweep_value", "algorithm", "n_seeds", "mean_total_delay",
    "mean_total_energy", "time_support_ratio", "cost_support_ratio", "mean_best_fitness",
)
RUNS_COLUMNS = (
    "seed", "algorithm", "U", "eta", "total_energy", "total_delay", "fitness",
    "time_support", "cost_support",
)
TRACE_COLUMNS = ("iteration", "best_fitness", "best_energy", "feasible")
TIMING_COLUMNS = ("sweep_variable", "sweep_value", "algorithm", "mean_wall_time")


@dataclass(frozen=True)
class ExperimentPlan:
    sweep_variable: str = "num_imds"
    sweep_values: tuple[float, ...] = (5, 10, 15, 20)
    seeds: tuple[int, ...] = tuple(range(20))
    algorithms: tuple[str, ...] = ALGORITHMS
    population_size: int = 32
    iterations: int = 500
    penalty_alpha: float = 1e4
    penalty_beta: float = 1e4
    output_dir: str = "results"
    scenario: dict = field(default_factory=dict)  # ScenarioConfig overrides

    def __post_init__(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep_variable must be one of {SWEEP_VARIABLES}")
        for name in ("sweep_values", "seeds", "algorithms"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithm(s): {', '.join(bad)}")
        clash = {"seed", self.sweep_variable} & set(self.scenario)
        if clash:
            raise ConfigError(f"scenario overrides may not set {', '.join(sorted(clash))}")
        # fail early on bad overrides / sweep values
        for value in self.sweep_values:
            self.scenario_config(value, self.seeds[0])

    @classmethod
    def from_file(cls, path) -> ExperimentPlan:
        entries = read_kv(path)
        plan_names = {f.name for f in fields(cls)} - {"scenario"}
        scenario_names = {f.name for f in fields(ScenarioConfig)}
        plan_kv = {k: v for k, v in entries.items() if k in plan_names}
        scen_kv = {k: v for k, v in entries.items() if k not in plan_names}
        unknown = sorted(set(scen_kv) - scenario_names)
        if unknown:
            raise ConfigError(f"unknown key(s) in plan {path}: {', '.join(unknown)}")
        return cls(**coerce_fields(cls, plan_kv),
                   scenario=coerce_fields(ScenarioConfig, scen_kv))

    def scenario_config(self, value, seed: int) -> ScenarioConfig:
        v = int(value) if self.sweep_variable == "num_imds" else float(value)
        return ScenarioConfig(seed=int(seed), **{**self.scenario, self.sweep_variable: v})

    def optimizer_params(self, algorithm: str, seed: int) -> OptimizerParams:
        return OptimizerParams(
            population_size=self.population_size,
            iterations=self.iterations,
            penalty_alpha=self.penalty_alpha,
            penalty_beta=self.penalty_beta,
            rng_seed=int(seed),
            variant=algorithm,
        )


@dataclass
class RunRecord:
    sweep_value: float
    seed: int
    algorithm: str
    num_imds: int
    partition_factor: float
    total_energy: float
    total_delay: float
    fitness: float
    time_support: float
    cost_support: float
    wall_time: float
    trace: Optional[list] = None
    max_conservation_error: float = 0.0
    evaluations: int = 0


@dataclass
class MetricsRow:
    sweep_variable: str
    sweep_value: float
    algorithm: str
    n_seeds: int
    mean_total_delay: float
    mean_total_energy: float
    time_support_ratio: float
    cost_support_ratio: float
    mean_best_fitness: float
    mean_wall_time: float


def compute_support_ratios(delay, deadline, cost, max_cost) -> tuple[float, float]:
    """Fractions of IMDs meeting their deadline and their breach-cost cap."""
    delay = np.asarray(delay)
    if delay.size == 0:
        log.warning("support ratios over an empty IMD set; reporting 1.0")
        return 1.0, 1.0
    time_ok = np.mean(delay <= np.asarray(deadline))
    cost_ok = np.mean(np.asarray(cost) <= np.asarray(max_cost))
    return float(time_ok), float(cost_ok)


def run_single(plan: ExperimentPlan, value, seed: int, algorithm: str,
               audit: bool = False) -> RunRecord:
    """Build one scenario, solve it with one algorithm, evaluate the result."""
    cfg = plan.scenario_config(value, seed)
    scenario = generate_scenario(cfg)
    worst = [0.0]
    evaluations = [0]

    def audit_cb(dv, report: EvaluationReport):
        evaluations[0] += len(report.fitness) if np.ndim(report.fitness) else 1
        worst[0] = max(worst[0], report.conservation_error(cfg.f_bs))

    start = time.perf_counter()
    trace = None
    if algorithm in ("IWOA", "WOA"):
        best, rows = run(scenario, plan.optimizer_params(algorithm, seed),
                         on_evaluate=audit_cb if audit else None)
        decision = best.position
        trace = [(r.iteration, r.best_fitness, r.best_energy, r.feasible) for r in rows]
    else:
        decision = getattr(baselines, algorithm.lower())(scenario)
    report = evaluate(scenario, decision, plan.penalty_alpha, plan.penalty_beta)
    wall = time.perf_counter() - start
    if audit:
        audit_cb(decision, report)
    t_ratio, c_ratio = compute_support_ratios(
        report.delay, scenario.deadline, report.cost, scenario.max_cost
    )
    return RunRecord(
        sweep_value=value, seed=int(seed), algorithm=algorithm,
        num_imds=cfg.num_imds, partition_factor=cfg.partition_factor,
        total_energy=float(report.total_energy), total_delay=float(report.delay.sum()),
        fitness=float(report.fitness), time_support=t_ratio, cost_support=c_ratio,
        wall_time=wall, trace=trace, max_conservation_error=worst[0],
        evaluations=evaluations[0],
    )


def _job(args):
    return run_single(*args)


def execute(plan: ExperimentPlan, workers: int = 1, audit: bool = False) -> list[RunRecord]:
    """Run every (value, seed, algorithm) job; results come back in plan order."""
    jobs = [
        (plan, value, seed, alg, audit)
        for value in plan.sweep_values
        for seed in plan.seeds
        for alg in plan.algorithms
    ]
    if workers <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, jobs))


def aggregate(plan: ExperimentPlan, records: list[RunRecord]) -> list[MetricsRow]:
    rows = []
    for value in plan.sweep_values:
        for alg in plan.algorithms:
            group = [r for r in records if r.sweep_value == value and r.algorithm == alg]
            rows.append(MetricsRow(
                sweep_variable=plan.sweep_variable,
                sweep_value=value,
                algorithm=alg,
                n_seeds=len(group),
                mean_total_delay=float(np.mean([r.total_delay for r in group])),
                mean_total_energy=float(np.mean([r.total_energy for r in group])),
                time_support_ratio=float(np.mean([r.time_support for r in group])),
                cost_support_ratio=float(np.mean([r.cost_support for r in group])),
                mean_best_fitness=float(np.mean([r.fitness for r in group])),
                mean_wall_time=float(np.mean([r.wall_time for r in group])),
            ))
    return rows


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, float):
        return repr(x)
    return x


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _value_label(plan: ExperimentPlan, value) -> str:
    return str(int(value)) if plan.sweep_variable == "num_imds" else repr(float(value))


def trace_filename(plan: ExperimentPlan, value, seed: int, algorithm: str) -> str:
    return f"trace_{plan.sweep_variable}-{_value_label(plan, value)}_seed{seed}_{algorithm}.csv"


def write_outputs(plan: ExperimentPlan, out_dir, records, metrics) -> None:
    out = Path(out_dir)
    traces = out / "traces"
    traces.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "metrics.csv", METRICS_COLUMNS, (
        [plan.sweep_variable, float(m.sweep_value), m.algorithm, m.n_seeds,
         m.mean_total_delay, m.mean_total_energy, m.time_support_ratio,
         m.cost_support_ratio, m.mean_best_fitness]
        for m in metrics
    ))
    _write_csv(out / "runs.csv", RUNS_COLUMNS, (
        [r.seed, r.algorithm, r.num_imds, float(r.partition_factor), r.total_energy,
         r.total_delay, r.fitness, r.time_support, r.cost_support]
        for r in records
    ))
    _write_csv(out / "timing.csv", TIMING_COLUMNS, (
        [plan.sweep_variable, float(m.sweep_value), m.algorithm, m.mean_wall_time]
        for m in metrics
    ))
    for r in records:
        if r.trace is not None:
            _write_csv(traces / trace_filename(plan, r.sweep_value, r.seed, r.algorithm),
                       TRACE_COLUMNS, r.trace)


def run_experiment(plan: ExperimentPlan, out_dir=None, workers: int = 1,
                   audit: bool = False):
    """Run the plan and write its CSVs. Returns ``(metrics_rows, run_records)``."""
    out = Path(out_dir if out_dir is not None else plan.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = execute(plan, workers=workers, audit=audit)
    metrics = aggregate(plan, records)
    write_outputs(plan, out, records, metrics)
    return metrics, records
