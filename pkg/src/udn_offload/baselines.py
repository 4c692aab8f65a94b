"""Rule-based comparison schemes: all-local (CMT) and all-offload (CMS)."""

from __future__ import annotations

import numpy as np

from .evaluator import DecisionVector, failure_probability
from .scenario import Scenario


def min_breach_crypto(scenario: Scenario) -> np.ndarray:
    """Lowest-indexed algorithm with the smallest breach cost, per (IMD, task). 1-based."""
    levels = scenario.crypto_level  # (L,)
    pf = failure_probability(
        scenario.risk_coeff[..., None], scenario.expected_level[..., None], levels
    )
    cost = scenario.finance_loss[..., None] * pf
    return np.argmin(cost, axis=-1) + 1


def cmt(scenario: Scenario) -> DecisionVector:
    """Everything executed on the device; nothing is uploaded.

    Uplink genes are inert here: nearest BS, channel 1, power floor. The crypto
    gene uses the zero-breach choice since it costs nothing when no data moves.
    """
    cfg = scenario.config
    U, K = scenario.num_imds, scenario.num_tasks
    floor = np.full((U, K), cfg.data_floor)
    return DecisionVector(
        bs=np.argmin(scenario.distances(), axis=1).astype(np.int64),
        crypto=min_breach_crypto(scenario).astype(np.int64),
        channel=np.ones(U, dtype=np.int64),
        power=np.full(U, cfg.power_floor),
        offload=floor,
        relay=floor.copy(),
    )


def cms(scenario: Scenario) -> DecisionVector:
    """Every task fully offloaded to the best-gain BS at full power.

    SBSs execute everything they receive (second-stage split at the floor);
    channels are assigned round-robin by IMD index.
    """
    cfg = scenario.config
    U, K = scenario.num_imds, scenario.num_tasks
    return DecisionVector(
        bs=np.argmax(scenario.channel_gain, axis=1).astype(np.int64),
        crypto=min_breach_crypto(scenario).astype(np.int64),
        channel=(np.arange(U) % scenario.num_subchannels + 1).astype(np.int64),
        power=np.full(U, cfg.max_power),
        offload=np.array(scenario.data_size, dtype=float),
        relay=np.full((U, K), cfg.data_floor),
    )
