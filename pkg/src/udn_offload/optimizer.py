"""Whale-optimization search over offloading decisions.

Two variants share one gene encoding:

``IWOA``
    historically-best attractor, nonlinear adaptive weights, Cauchy prey
    search, and a greedy neighborhood search around the best agent.
``WOA``
    the conventional algorithm (linear ``a`` schedule, random-whale
    exploration, logarithmic spiral, current-best attractor).

All random draws happen on the calling thread in a fixed order, so a run is a
pure function of ``(scenario, params)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .evaluator import DecisionVector, EvaluationReport, evaluate, repair
from .scenario import Scenario

VARIANTS = ("IWOA", "WOA")
SPIRAL_SHAPE = 1.0


@dataclass(frozen=True)
class OptimizerParams:
    population_size: int = 32
    iterations: int = 500
    penalty_alpha: float = 1e4
    penalty_beta: float = 1e4
    rng_seed: int = 0
    variant: str = "IWOA"
    eval_workers: int = 1

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (self.penalty_alpha > 0 and self.penalty_beta > 0):
            raise ValueError("penalty factors must be > 0")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.eval_workers < 1:
            raise ValueError("eval_workers must be >= 1")


@dataclass
class Agent:
    position: DecisionVector
    fitness: float
    report: EvaluationReport


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    best_fitness: float
    best_energy: float
    feasible: bool


@dataclass
class OptimizerState:
    population: DecisionVector  # batched, always repaired
    fitness: np.ndarray
    best: Agent
    t: int
    rng: np.random.Generator
    trace: list[TraceRow] = field(default_factory=list)
    evaluations: int = 0
    branch_counts: dict = field(default_factory=lambda: {"cauchy": 0, "encircle": 0, "spiral": 0})


class GeneLayout:
    """Flat float view of a decision: ``[bs | crypto | channel | power | offload | relay]``."""

    def __init__(self, scenario: Scenario):
        U, K = scenario.num_imds, scenario.num_tasks
        self.U, self.K = U, K
        self.sizes = (U, U * K, U, U, U * K, U * K)
        self.bounds = np.cumsum((0,) + self.sizes)
        self.size = int(self.bounds[-1])
        integer = np.zeros(self.size, dtype=bool)
        integer[: self.bounds[3]] = True
        self.integer = integer

    def encode(self, dv: DecisionVector) -> np.ndarray:
        dv = dv.as_batch()
        M = len(dv)
        parts = (dv.bs, dv.crypto, dv.channel, dv.power, dv.offload, dv.relay)
        return np.concatenate([np.asarray(p, dtype=float).reshape(M, -1) for p in parts], axis=1)

    def decode(self, x: np.ndarray) -> DecisionVector:
        x = np.atleast_2d(x)
        M = x.shape[0]
        b = self.bounds
        U, K = self.U, self.K
        return DecisionVector(
            bs=x[:, b[0]:b[1]],
            crypto=x[:, b[1]:b[2]].reshape(M, U, K),
            channel=x[:, b[2]:b[3]],
            power=x[:, b[3]:b[4]],
            offload=x[:, b[4]:b[5]].reshape(M, U, K),
            relay=x[:, b[5]:b[6]].reshape(M, U, K),
        )

    def round_integers(self, x: np.ndarray) -> np.ndarray:
        x = np.array(x, dtype=float)
        xi = x[..., self.integer]
        with np.errstate(invalid="ignore"):
            x[..., self.integer] = np.sign(xi) * np.floor(np.abs(xi) + 0.5)
        return x


# ---------------------------------------------------------------------------
# coefficient schedules and moves (pure functions of their inputs)


def kappa1(t, T):
    return math.sin(t * math.pi / (2 * T) + math.pi) + 1.0


def coefficients(t: int, T: int, rng: np.random.Generator, size=None):
    """Adaptive weights ``(k1, k2, k3, k4)``; ``r1, r2, r3`` are drawn in that order."""
    r1 = rng.random(size)
    r2 = rng.random(size)
    r3 = rng.random(size)
    return coefficients_from(t, T, r1, r2, r3)


def coefficients_from(t, T, r1, r2, r3):
    k1 = kappa1(t, T)
    k2 = 2.0 * (2.0 * r1 - 1.0) * (1.0 - math.sin(t * math.pi / (2 * T)))
    k3 = 2.0 * r2
    a3 = (-2.0 - t / T) * r3 + 1.0
    k4 = np.exp(a3 + 5.0 * math.cos(math.pi * (1.0 - t / T))) * np.cos(2.0 * a3 * math.pi)
    return k1, k2, k3, k4


def encircle(x, x_best, k1, k2, k3):
    return k1 * x_best - k2 * np.abs(k3 * x_best - x)


def spiral(x, x_best, k1, k3, k4):
    return k1 * x_best + k4 * np.abs(k3 * x_best - x)


def cauchy_search(x, k2, r):
    """Cauchy-quantile mutation with one uniform ``r`` per gene."""
    return x + k2 * np.tan(np.pi * (r - 0.5))


def neighborhood_search(x_best, r):
    return x_best * (1.0 + 0.5 * r)


def woa_a(t, T):
    """Linearly decreasing WOA control parameter, 2 at ``t = 0`` and 0 at ``t = T``."""
    return 2.0 - 2.0 * t / T


def woa_spiral(x, x_best, l):
    return np.abs(x_best - x) * np.exp(SPIRAL_SHAPE * l) * np.cos(2.0 * np.pi * l) + x_best


def greedy_accept(fitness, candidate_fitness):
    """Mask of agents whose candidate is strictly better."""
    return np.asarray(candidate_fitness) > np.asarray(fitness)


# ---------------------------------------------------------------------------


OnEvaluate = Callable[[DecisionVector, EvaluationReport], None]


class _Evaluator:
    def __init__(self, scenario, params, on_evaluate: Optional[OnEvaluate]):
        self.scenario = scenario
        self.alpha = params.penalty_alpha
        self.beta = params.penalty_beta
        self.workers = params.eval_workers
        self.on_evaluate = on_evaluate

    def __call__(self, dv: DecisionVector) -> EvaluationReport:
        if self.workers > 1 and len(dv) > 1:
            chunks = np.array_split(np.arange(len(dv)), min(self.workers, len(dv)))
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(
                    lambda idx: evaluate(self.scenario, dv[idx], self.alpha, self.beta), chunks
                ))
            report = EvaluationReport(*(
                np.concatenate([getattr(p, name) for p in parts])
                for name in EvaluationReport.__dataclass_fields__
            ))
        else:
            report = evaluate(self.scenario, dv, self.alpha, self.beta)
        if self.on_evaluate is not None:
            self.on_evaluate(dv, report)
        return report


def _agent(pop: DecisionVector, report: EvaluationReport, m: int) -> Agent:
    return Agent(position=pop[m].copy(), fitness=float(report.fitness[m]), report=report[m])


def _record(state: OptimizerState):
    best = state.best
    state.trace.append(TraceRow(
        iteration=state.t,
        best_fitness=best.fitness,
        best_energy=float(best.report.total_energy),
        feasible=bool(best.report.feasible),
    ))


def _promote(state: OptimizerState, pop: DecisionVector, report: EvaluationReport):
    m = int(np.argmax(report.fitness))
    if report.fitness[m] > state.best.fitness:
        state.best = _agent(pop, report, m)


def initialize(scenario: Scenario, params: OptimizerParams,
               on_evaluate: Optional[OnEvaluate] = None) -> OptimizerState:
    """Random initial population; every position repaired and evaluated."""
    rng = np.random.default_rng(params.rng_seed)
    M, U, K = params.population_size, scenario.num_imds, scenario.num_tasks
    cfg = scenario.config
    bs = rng.integers(0, scenario.num_sbs + 1, size=(M, U))
    crypto = rng.integers(1, scenario.num_crypto + 1, size=(M, U, K))
    channel = rng.integers(1, scenario.num_subchannels + 1, size=(M, U))
    # uniform on (0, upper]
    power = (1.0 - rng.random((M, U))) * cfg.max_power
    offload = (1.0 - rng.random((M, U, K))) * scenario.data_size
    relay = (1.0 - rng.random((M, U, K))) * offload
    pop = repair(scenario, DecisionVector(bs, crypto, channel, power, offload, relay))
    report = _Evaluator(scenario, params, on_evaluate)(pop)
    m = int(np.argmax(report.fitness))
    return OptimizerState(
        population=pop,
        fitness=np.array(report.fitness),
        best=_agent(pop, report, m),
        t=1,
        rng=rng,
        evaluations=M,
    )


def step(state: OptimizerState, scenario: Scenario, params: OptimizerParams,
         on_evaluate: Optional[OnEvaluate] = None) -> OptimizerState:
    """One IWOA iteration: main move for every agent, then neighborhood search."""
    layout = GeneLayout(scenario)
    evaluate_batch = _Evaluator(scenario, params, on_evaluate)
    rng = state.rng
    M = len(state.population)
    t, T = state.t, params.iterations

    x = layout.encode(state.population)
    xb = layout.encode(state.best.position)[0]
    k1, k2, k3, k4 = coefficients(t, T, rng, size=M)
    r5 = rng.random(M)
    rc = rng.random((M, layout.size))

    k2c, k3c, k4c = k2[:, None], k3[:, None], k4[:, None]
    moves = np.where(
        (r5 < 0.5)[:, None],
        np.where((np.abs(k2) >= 1.0)[:, None],
                 cauchy_search(x, k2c, rc),
                 encircle(x, xb, k1, k2c, k3c)),
        spiral(x, xb, k1, k3c, k4c),
    )
    cauchy = (r5 < 0.5) & (np.abs(k2) >= 1.0)
    state.branch_counts["cauchy"] += int(cauchy.sum())
    state.branch_counts["encircle"] += int(((r5 < 0.5) & ~cauchy).sum())
    state.branch_counts["spiral"] += int((r5 >= 0.5).sum())

    pop = repair(scenario, layout.decode(layout.round_integers(moves)))
    report = evaluate_batch(pop)
    fit = np.array(report.fitness)
    _promote(state, pop, report)

    r4 = rng.random((M, layout.size))
    xb = layout.encode(state.best.position)[0]
    cand = repair(scenario, layout.decode(layout.round_integers(neighborhood_search(xb, r4))))
    cand_report = evaluate_batch(cand)
    take = greedy_accept(fit, cand_report.fitness)
    pop = cand.where(take, pop)
    fit = np.where(take, cand_report.fitness, fit)
    _promote(state, cand, cand_report)

    state.population, state.fitness = pop, fit
    state.evaluations += 2 * M
    _record(state)
    state.t += 1
    return state


def woa_step(state: OptimizerState, scenario: Scenario, params: OptimizerParams,
             on_evaluate: Optional[OnEvaluate] = None) -> OptimizerState:
    """One conventional WOA iteration (current-best attractor, no extra searches)."""
    layout = GeneLayout(scenario)
    evaluate_batch = _Evaluator(scenario, params, on_evaluate)
    rng = state.rng
    M = len(state.population)
    t, T = state.t, params.iterations

    a = woa_a(t, T)
    r1 = rng.random(M)
    r2 = rng.random(M)
    p = rng.random(M)
    l = rng.uniform(-1.0, 1.0, M)
    partner = rng.integers(0, M, size=M)
    A = (2.0 * a * r1 - a)[:, None]
    C = (2.0 * r2)[:, None]

    x = layout.encode(state.population)
    xb = x[int(np.argmax(state.fitness))]
    xr = x[partner]
    explore = xr - A * np.abs(C * xr - x)
    shrink = xb - A * np.abs(C * xb - x)
    helix = woa_spiral(x, xb, l[:, None])
    moves = np.where(
        (p < 0.5)[:, None],
        np.where(np.abs(A) >= 1.0, explore, shrink),
        helix,
    )
    pop = repair(scenario, layout.decode(layout.round_integers(moves)))
    report = evaluate_batch(pop)
    state.population, state.fitness = pop, np.array(report.fitness)
    _promote(state, pop, report)
    state.evaluations += M
    _record(state)
    state.t += 1
    return state


def optimize(scenario: Scenario, params: OptimizerParams,
             on_evaluate: Optional[OnEvaluate] = None) -> OptimizerState:
    state = initialize(scenario, params, on_evaluate)
    advance = step if params.variant == "IWOA" else woa_step
    while state.t <= params.iterations:
        advance(state, scenario, params, on_evaluate)
    return state


def run(scenario: Scenario, params: OptimizerParams,
        on_evaluate: Optional[OnEvaluate] = None) -> tuple[Agent, list[TraceRow]]:
    """Initialize, iterate ``params.iterations`` times; return the best agent and trace."""
    state = optimize(scenario, params, on_evaluate)
    return state.best, state.trace
