"""Secure multi-step offloading in ultra-dense NOMA IoT networks: system model,
whale-optimization solvers, rule-based baselines and an experiment harness."""

from .baselines import cms, cmt
from .evaluator import DecisionVector, EvaluationReport, evaluate, repair
from .optimizer import OptimizerParams, run
from .scenario import Scenario, ScenarioConfig, generate_scenario

__all__ = [
    "DecisionVector", "EvaluationReport", "OptimizerParams", "Scenario", "ScenarioConfig",
    "cms", "cmt", "evaluate", "generate_scenario", "repair", "run",
]
