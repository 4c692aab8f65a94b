"""Scalar reference model and exhaustive tiny-instance check.

``reference_fitness`` recomputes delays, energy, breach costs and the penalized
fitness with plain loops over IMDs and tasks. It shares no code with
:mod:`udn_offload.evaluator` so the two can be checked against each other.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .scenario import DEFAULT_DECRYPT_COST, DEFAULT_ENCRYPT_COST, DEFAULT_ENERGY_COST
from .scenario import ScenarioConfig, Scenario, generate_scenario

POWER_FRACTIONS = (0.1, 0.5, 1.0)
SPLIT_FRACTIONS = (0.0, 0.5, 1.0)


def reference_fitness(sc: Scenario, bs, crypto, channel, power, offload, relay,
                      alpha=1e4, beta=1e4):
    """Return ``(fitness, energy, delays, costs)`` for one repaired decision given as lists."""
    cfg = sc.config
    U, K = sc.num_imds, sc.num_tasks
    gain = sc.channel_gain.tolist()
    cluster = sc.cluster_of_bs.tolist()
    d = sc.data_size.tolist()
    c = sc.cycles_per_bit.tolist()
    cat = sc.crypto_catalog
    floor = cfg.data_floor

    n_mbs = sum(1 for i in range(U) if bs[i] == 0)
    rate = [0.0] * U
    for i in range(U):
        s = bs[i]
        if s == 0:
            snr = power[i] * gain[i][0] / cfg.noise_power
            rate[i] = sc.mbs_bandwidth / n_mbs * math.log1p(snr) / math.log(2.0)
            continue
        interference = 0.0
        for u in range(U):
            if u == i or bs[u] == 0:
                continue
            if channel[u] != channel[i] or cluster[bs[u]] != cluster[s]:
                continue
            if gain[u][s] <= gain[i][s]:
                interference += power[u] * gain[u][s]
        sinr = power[i] * gain[i][s] / (interference + cfg.noise_power)
        rate[i] = cfg.subchannel_bandwidth * math.log1p(sinr) / math.log(2.0)

    # per-BS workload totals
    sbs_load = {}
    mbs_load = 0.0
    for u in range(U):
        for j in range(K):
            a = cat[crypto[u][j] - 1]
            g, h = offload[u][j], relay[u][j]
            if bs[u] == 0:
                mbs_load += g * c[u][j] + a.decrypt_cost * g
            else:
                w = (g - h) * c[u][j] + a.decrypt_cost * g + a.encrypt_cost * h
                sbs_load[bs[u]] = sbs_load.get(bs[u], 0.0) + w
                mbs_load += h * c[u][j] + a.decrypt_cost * h

    energy = 0.0
    delays, costs = [], []
    for i in range(U):
        tau = 0.0
        psi = 0.0
        for k in range(K):
            a = cat[crypto[i][k] - 1]
            g, h = offload[i][k], relay[i][k]
            if rate[i] > 0:
                up = g / rate[i]
            else:
                up = math.inf if g > floor else 0.0

            t_local = ((d[i][k] - g) * c[i][k] + a.encrypt_cost * g) / cfg.f_ue
            if bs[i] == 0:
                v = g * c[i][k] + a.decrypt_cost * g
                f0 = cfg.f_bs * v / mbs_load if mbs_load > 0 else cfg.f_bs
                t_remote = up + g * c[i][k] / f0 + a.decrypt_cost * g / f0
            else:
                w = (g - h) * c[i][k] + a.decrypt_cost * g + a.encrypt_cost * h
                load = sbs_load[bs[i]]
                fs = cfg.f_bs * w / load if load > 0 else cfg.f_bs
                v = h * c[i][k] + a.decrypt_cost * h
                f0 = cfg.f_bs * v / mbs_load if mbs_load > 0 else cfg.f_bs
                t_remote = (up + (g - h) * c[i][k] / fs + h / cfg.backhaul_rate
                            + h * c[i][k] / f0 + a.decrypt_cost * g / fs
                            + a.encrypt_cost * h / fs + a.decrypt_cost * h / f0)
            tau += max(t_local, t_remote)

            energy += cfg.energy_coeff * (d[i][k] - g) * c[i][k] * cfg.f_ue ** 2
            energy += a.energy_cost * g
            energy += power[i] / 1000.0 * up

            rho = int(sc.expected_level[i, k])
            if a.level < rho:
                pf = -math.expm1(-float(sc.risk_coeff[i, k]) * (rho - a.level))
            else:
                pf = 0.0
            psi += float(sc.finance_loss[i, k]) * pf
        delays.append(tau)
        costs.append(psi)

    penalty = 0.0
    for i in range(U):
        penalty += alpha * max(0.0, delays[i] - float(sc.deadline[i]))
        penalty += beta * max(0.0, costs[i] - float(sc.max_cost[i]))
    return -energy - penalty, energy, delays, costs


def tiny_scenario(rng: np.random.Generator) -> Scenario:
    """Random instance with U, S, K, N <= 2 and a two-entry crypto catalog."""
    U = int(rng.integers(1, 3))
    S = int(rng.integers(U, 3))
    K = int(rng.integers(1, 3))
    W = int(rng.integers(1, S + 1))
    n_target = int(rng.integers(1, 3))
    eta = float(rng.uniform(0.05, 0.95))
    bandwidth = 2.0e7
    omega = (1.0 - eta) * bandwidth / (W * n_target)
    picks = np.sort(rng.choice(6, size=2, replace=False))
    cfg = ScenarioConfig(
        seed=int(rng.integers(0, 2**32)),
        num_imds=U, num_sbs=S, num_clusters=W, num_tasks_per_imd=K,
        system_bandwidth=bandwidth, subchannel_bandwidth=omega, partition_factor=eta,
        macrocell_radius=float(rng.uniform(100.0, 500.0)),
        energy_coeff=float(rng.choice([1e-27, 1e-26, 1e-25])),
        deadline_range=(0.05, 3.0),
        max_breach_cost_range=(0.5, 6.0),
        expected_level_set=(2, 4, 6),
        crypto_levels=tuple(int(p) + 1 for p in picks),
        crypto_encrypt_cost=tuple(DEFAULT_ENCRYPT_COST[p] for p in picks),
        crypto_decrypt_cost=tuple(DEFAULT_DECRYPT_COST[p] for p in picks),
        crypto_energy_cost=tuple(DEFAULT_ENERGY_COST[p] for p in picks),
    )
    sc = generate_scenario(cfg)
    assert sc.num_subchannels == n_target
    return sc


def enumerate_decisions(sc: Scenario):
    """Every discretized decision: all integer genes, a power grid per IMD and
    one split fraction per stage shared by all tasks.

    Returns a raw batched :class:`~udn_offload.evaluator.DecisionVector`.
    """
    from .evaluator import DecisionVector

    U, K, S = sc.num_imds, sc.num_tasks, sc.num_sbs
    L, N = sc.num_crypto, sc.num_subchannels
    pmax = sc.config.max_power
    rows = {"bs": [], "crypto": [], "channel": [], "power": [], "offload": [], "relay": []}
    d = sc.data_size
    for b, o, e, p, fg, fh in itertools.product(
        itertools.product(range(S + 1), repeat=U),
        itertools.product(range(1, L + 1), repeat=U * K),
        itertools.product(range(1, N + 1), repeat=U),
        itertools.product(POWER_FRACTIONS, repeat=U),
        SPLIT_FRACTIONS,
        SPLIT_FRACTIONS,
    ):
        g = d * fg
        rows["bs"].append(b)
        rows["crypto"].append(np.reshape(o, (U, K)))
        rows["channel"].append(e)
        rows["power"].append(np.asarray(p) * pmax)
        rows["offload"].append(g)
        rows["relay"].append(g * fh)
    return DecisionVector(**{k: np.asarray(v) for k, v in rows.items()})


@dataclass
class OracleResult:
    instances: int
    points: int
    max_rel_error: float
    mismatches: int


def _rel_err(a: float, b: float) -> float:
    if a == b:
        return 0.0
    if math.isinf(a) or math.isinf(b) or math.isnan(a) or math.isnan(b):
        return math.inf
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def oracle_check(n_instances: int = 50, seed: int = 2024, tol: float = 1e-9,
                 alpha: float = 1e4, beta: float = 1e4) -> OracleResult:
    """Compare the vectorized evaluator against :func:`reference_fitness` on
    every enumerated decision of ``n_instances`` random tiny scenarios."""
    from .evaluator import evaluate, repair

    rng = np.random.default_rng(seed)
    worst, points, bad = 0.0, 0, 0
    for _ in range(n_instances):
        sc = tiny_scenario(rng)
        dv = repair(sc, enumerate_decisions(sc))
        rep = evaluate(sc, dv, alpha, beta)
        bs, crypto, channel = dv.bs.tolist(), dv.crypto.tolist(), dv.channel.tolist()
        power, offload, relay = dv.power.tolist(), dv.offload.tolist(), dv.relay.tolist()
        fit = rep.fitness.tolist()
        for m in range(len(dv)):
            ref, _, _, _ = reference_fitness(
                sc, bs[m], crypto[m], channel[m], power[m], offload[m], relay[m], alpha, beta
            )
            err = _rel_err(fit[m], ref)
            worst = max(worst, err)
            bad += err > tol
        points += len(dv)
    return OracleResult(n_instances, points, worst, bad)
