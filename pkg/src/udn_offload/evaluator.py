"""Decision decoding, delay/energy/breach-cost model and penalized fitness.

Every function here is pure. Decisions may carry a leading population axis
(shape ``(M, U)`` etc.); :func:`evaluate` handles both a single decision and a
stacked population in one vectorized pass.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .scenario import Scenario

LN2 = np.log(2.0)
DEFAULT_PENALTY = 1e4


class RepairError(RuntimeError):
    """A decision gene is outside its domain where repair should have run."""


@dataclass
class DecisionVector:
    """One agent's position, or a population of them stacked on axis 0.

    ``bs`` is 0 for the MBS and ``1..S`` for SBSs; ``crypto`` and ``channel``
    are 1-based. ``power`` is in mW, ``offload``/``relay`` in bits.
    """

    bs: np.ndarray  # (..., U)
    crypto: np.ndarray  # (..., U, K)
    channel: np.ndarray  # (..., U)
    power: np.ndarray  # (..., U)
    offload: np.ndarray  # (..., U, K) first-stage split
    relay: np.ndarray  # (..., U, K) second-stage split

    @property
    def batched(self) -> bool:
        return self.bs.ndim == 2

    def __len__(self) -> int:
        return self.bs.shape[0] if self.batched else 1

    def __getitem__(self, m) -> DecisionVector:
        if not self.batched:
            raise TypeError("indexing requires a batched DecisionVector")
        return DecisionVector(*(getattr(self, f.name)[m] for f in fields(self)))

    def as_batch(self) -> DecisionVector:
        if self.batched:
            return self
        return DecisionVector(*(np.asarray(getattr(self, f.name))[None] for f in fields(self)))

    def copy(self) -> DecisionVector:
        return DecisionVector(*(np.array(getattr(self, f.name)) for f in fields(self)))

    @classmethod
    def stack(cls, decisions) -> DecisionVector:
        decisions = list(decisions)
        return cls(*(np.stack([getattr(d, f.name) for d in decisions]) for f in fields(cls)))

    def where(self, mask, other: DecisionVector) -> DecisionVector:
        """Per-agent select: ``self`` where ``mask`` else ``other``."""
        out = []
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            m = np.asarray(mask).reshape((-1,) + (1,) * (a.ndim - 1))
            out.append(np.where(m, a, b))
        return DecisionVector(*out)

    def equals(self, other: DecisionVector) -> bool:
        return all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self)
        )


@dataclass
class EvaluationReport:
    """Everything computed for one decision (or a population, on axis 0)."""

    total_energy: np.ndarray  # J
    delay: np.ndarray  # per IMD, s
    cost: np.ndarray  # per IMD, k$
    delay_violation: np.ndarray
    cost_violation: np.ndarray
    fitness: np.ndarray
    feasible: np.ndarray
    rate: np.ndarray  # per IMD, bits/s
    sbs_share: np.ndarray  # per task, cycles/s (nan for MBS-associated IMDs)
    mbs_share: np.ndarray  # per task, cycles/s
    local_time: np.ndarray  # per task
    remote_time: np.ndarray  # per task
    bs_share_total: np.ndarray  # per BS, sum of shares handed out
    bs_claimants: np.ndarray  # per BS, number of claimant tasks

    def __getitem__(self, m) -> EvaluationReport:
        return EvaluationReport(*(getattr(self, f.name)[m] for f in fields(self)))

    def conservation_error(self, f_bs: float) -> float:
        """Largest relative gap between a BS's handed-out shares and its capacity."""
        claimed = self.bs_claimants > 0
        if not np.any(claimed):
            return 0.0
        return float(np.max(np.abs(self.bs_share_total[claimed] - f_bs)) / f_bs)


# ---------------------------------------------------------------------------
# formula kernels (broadcastable)


def failure_probability(risk_coeff, expected_level, level):
    gap = np.asarray(expected_level, dtype=float) - np.asarray(level, dtype=float)
    return np.where(gap > 0, -np.expm1(-np.asarray(risk_coeff) * np.maximum(gap, 0.0)), 0.0)


def sbs_rate(bandwidth, signal, interference, noise):
    return bandwidth * np.log1p(signal / (interference + noise)) / LN2


def mbs_rate(mbs_bandwidth, n_mbs_users, signal, noise):
    return mbs_bandwidth / n_mbs_users * np.log1p(signal / noise) / LN2


def upload_time(bits, rate, data_floor):
    """``bits / rate``; a dead link with real data on it takes forever."""
    bits = np.asarray(bits, dtype=float)
    rate = np.asarray(rate, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = bits / rate
    return np.where(rate > 0, t, np.where(bits > data_floor, np.inf, 0.0))


def local_time(data_size, offload, cycles, encrypt_cost, f_ue):
    return ((data_size - offload) * cycles + encrypt_cost * offload) / f_ue


def remote_time_sbs(offload, relay, upload, cycles, share_sbs, share_mbs,
                    decrypt_cost, encrypt_cost, backhaul_rate):
    return (
        upload
        + (offload - relay) * cycles / share_sbs
        + relay / backhaul_rate
        + relay * cycles / share_mbs
        + decrypt_cost * offload / share_sbs
        + encrypt_cost * relay / share_sbs
        + decrypt_cost * relay / share_mbs
    )


def remote_time_mbs(offload, upload, cycles, share_mbs, decrypt_cost):
    return upload + offload * cycles / share_mbs + decrypt_cost * offload / share_mbs


def proportional_share(capacity, weight, total):
    """Capacity split in proportion to ``weight``; a BS with no workload hands out all of it."""
    weight = np.asarray(weight, dtype=float)
    total = np.asarray(total, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        share = capacity * weight / total
    return np.where(total > 0, share, capacity)


# ---------------------------------------------------------------------------
# repair


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _clip_int(x, lo, hi):
    x = np.nan_to_num(np.asarray(x, dtype=float), nan=lo, posinf=hi, neginf=lo)
    return np.clip(_round_half_away(x), lo, hi).astype(np.int64)


def repair(scenario: Scenario, raw: DecisionVector) -> DecisionVector:
    """Project a raw position onto the box/ordering constraints.

    Integer genes are rounded and clamped; power is clamped to
    ``[power_floor, max_power]``; the first-stage split is clamped into
    ``[data_floor, d]`` and the second-stage split into ``[data_floor, offload]``.
    """
    cfg = scenario.config
    d = scenario.data_size
    power = np.nan_to_num(np.asarray(raw.power, dtype=float), nan=cfg.power_floor,
                          posinf=cfg.max_power, neginf=cfg.power_floor)
    offload = np.nan_to_num(np.asarray(raw.offload, dtype=float), nan=cfg.data_floor,
                            posinf=np.inf, neginf=cfg.data_floor)
    offload = np.clip(offload, cfg.data_floor, d)
    relay = np.nan_to_num(np.asarray(raw.relay, dtype=float), nan=cfg.data_floor,
                          posinf=np.inf, neginf=cfg.data_floor)
    relay = np.clip(relay, cfg.data_floor, offload)
    return DecisionVector(
        bs=_clip_int(raw.bs, 0, scenario.num_sbs),
        crypto=_clip_int(raw.crypto, 1, scenario.num_crypto),
        channel=_clip_int(raw.channel, 1, scenario.num_subchannels),
        power=np.clip(power, cfg.power_floor, cfg.max_power),
        offload=offload,
        relay=relay,
    )


def check_domain(scenario: Scenario, decision: DecisionVector) -> None:
    """Raise :class:`RepairError` if any integer gene is out of range."""
    for name, lo, hi in (
        ("bs", 0, scenario.num_sbs),
        ("crypto", 1, scenario.num_crypto),
        ("channel", 1, scenario.num_subchannels),
    ):
        gene = np.asarray(getattr(decision, name))
        if gene.size and (gene.min() < lo or gene.max() > hi):
            raise RepairError(f"{name} gene outside [{lo}, {hi}]")


# ---------------------------------------------------------------------------
# vectorized evaluation


def _per_bs_sum(values, bs, n_bs):
    """Sum ``values[m, i]`` into ``out[m, bs[m, i]]``."""
    M = bs.shape[0]
    idx = (bs + n_bs * np.arange(M)[:, None]).ravel()
    return np.bincount(idx, weights=values.ravel(), minlength=M * n_bs).reshape(M, n_bs)


def uplink_rates(scenario: Scenario, decision: DecisionVector) -> np.ndarray:
    """Uplink rate of every IMD on its chosen BS and subchannel."""
    single = not decision.batched
    dv = decision.as_batch()
    check_domain(scenario, dv)
    rate = _rates(scenario, dv)
    return rate[0] if single else rate


def _rates(scenario: Scenario, dv: DecisionVector) -> np.ndarray:
    cfg = scenario.config
    gain = scenario.channel_gain
    M, U = dv.bs.shape
    b, p, ch = dv.bs, dv.power, dv.channel
    imd = np.arange(U)
    own_gain = gain[imd, b]  # (M, U)
    signal = p * own_gain

    # at_bs[m, i, u] = gain of IMD u towards IMD i's chosen BS
    at_bs = gain.T[b]
    cluster = scenario.cluster_of_bs[b]
    on_sbs = b >= 1
    weaker = at_bs <= own_gain[:, :, None]
    same_ch = ch[:, :, None] == ch[:, None, :]
    same_cluster = (cluster[:, :, None] == cluster[:, None, :]) & on_sbs[:, None, :]
    mask = weaker & same_ch & same_cluster
    mask[:, imd, imd] = False
    interference = np.einsum("miu,miu,mu->mi", mask, at_bs, p)
    r_sbs = sbs_rate(cfg.subchannel_bandwidth, signal, interference, cfg.noise_power)

    n_mbs = np.count_nonzero(b == 0, axis=1)[:, None]
    r_mbs = mbs_rate(scenario.mbs_bandwidth, np.maximum(n_mbs, 1), signal, cfg.noise_power)
    return np.where(on_sbs, r_sbs, r_mbs)


def compute_shares(scenario: Scenario, decision: DecisionVector):
    """Return ``(sbs_share, mbs_share)`` per (IMD, task).

    ``sbs_share`` is nan for tasks of MBS-associated IMDs.
    """
    single = not decision.batched
    dv = decision.as_batch()
    check_domain(scenario, dv)
    out = _shares(scenario, dv)
    sbs_share, mbs_share = out[0], out[1]
    return (sbs_share[0], mbs_share[0]) if single else (sbs_share, mbs_share)


def _shares(scenario: Scenario, dv: DecisionVector):
    cfg = scenario.config
    n_bs = scenario.num_sbs + 1
    M, U = dv.bs.shape
    K = scenario.num_tasks
    c = scenario.cycles_per_bit
    g, h = dv.offload, dv.relay
    enc = scenario.encrypt_cost[dv.crypto - 1]
    dec = scenario.decrypt_cost[dv.crypto - 1]
    on_sbs = (dv.bs >= 1)[:, :, None]

    w_sbs = np.where(on_sbs, (g - h) * c + dec * g + enc * h, 0.0)
    den_sbs = _per_bs_sum(w_sbs.sum(axis=2), dv.bs, n_bs)
    own_den = np.take_along_axis(den_sbs, dv.bs, axis=1)[:, :, None]
    sbs_share = np.where(on_sbs, proportional_share(cfg.f_bs, w_sbs, own_den), np.nan)

    w_mbs = np.where(on_sbs, h * c + dec * h, g * c + dec * g)
    den_mbs = w_mbs.sum(axis=(1, 2))[:, None, None]
    mbs_share = proportional_share(cfg.f_bs, w_mbs, den_mbs)

    share_total = _per_bs_sum(np.where(on_sbs, sbs_share, 0.0).sum(axis=2), dv.bs, n_bs)
    share_total[:, 0] = mbs_share.sum(axis=(1, 2))
    claimants = _per_bs_sum(np.broadcast_to(on_sbs, (M, U, K)).sum(axis=2).astype(float),
                            dv.bs, n_bs)
    claimants[:, 0] = U * K
    return sbs_share, mbs_share, share_total, claimants


def breach_costs(scenario: Scenario, decision: DecisionVector) -> np.ndarray:
    level = scenario.crypto_level[np.asarray(decision.crypto) - 1]
    pf = failure_probability(scenario.risk_coeff, scenario.expected_level, level)
    return (scenario.finance_loss * pf).sum(axis=-1)


def evaluate(scenario: Scenario, decision: DecisionVector,
             alpha=DEFAULT_PENALTY, beta=DEFAULT_PENALTY) -> EvaluationReport:
    """Full model evaluation and penalized fitness.

    ``decision`` must already be repaired. ``alpha``/``beta`` may be scalars or
    per-IMD arrays.
    """
    single = not decision.batched
    dv = decision.as_batch()
    check_domain(scenario, dv)
    cfg = scenario.config
    d, c = scenario.data_size, scenario.cycles_per_bit
    g, h = dv.offload, dv.relay
    enc = scenario.encrypt_cost[dv.crypto - 1]
    dec = scenario.decrypt_cost[dv.crypto - 1]
    en = scenario.energy_cost[dv.crypto - 1]
    on_sbs = (dv.bs >= 1)[:, :, None]

    rate = _rates(scenario, dv)
    sbs_share, mbs_share, share_total, claimants = _shares(scenario, dv)
    up = upload_time(g, rate[:, :, None], cfg.data_floor)

    t_loc = local_time(d, g, c, enc, cfg.f_ue)
    with np.errstate(invalid="ignore"):
        t_sbs = remote_time_sbs(g, h, up, c, sbs_share, mbs_share, dec, enc, cfg.backhaul_rate)
    t_mbs = remote_time_mbs(g, up, c, mbs_share, dec)
    t_rem = np.where(on_sbs, t_sbs, t_mbs)
    delay = np.maximum(t_loc, t_rem).sum(axis=2)

    energy = (
        cfg.energy_coeff * (d - g) * c * cfg.f_ue**2
        + en * g
        + (dv.power[:, :, None] * 1e-3) * up
    ).sum(axis=(1, 2))

    cost = breach_costs(scenario, dv)
    dviol = np.maximum(0.0, delay - scenario.deadline)
    cviol = np.maximum(0.0, cost - scenario.max_cost)
    fitness = -energy - (alpha * dviol).sum(axis=1) - (beta * cviol).sum(axis=1)
    feasible = ~(np.any(dviol > 0, axis=1) | np.any(cviol > 0, axis=1))

    report = EvaluationReport(
        total_energy=energy, delay=delay, cost=cost, delay_violation=dviol,
        cost_violation=cviol, fitness=fitness, feasible=feasible, rate=rate,
        sbs_share=sbs_share, mbs_share=mbs_share, local_time=t_loc, remote_time=t_rem,
        bs_share_total=share_total, bs_claimants=claimants,
    )
    return report[0] if single else report


def fitness(scenario: Scenario, decision: DecisionVector,
            alpha=DEFAULT_PENALTY, beta=DEFAULT_PENALTY) -> EvaluationReport:
    """Alias of :func:`evaluate` for a single decision."""
    return evaluate(scenario, decision, alpha, beta)


# ---------------------------------------------------------------------------
# per-IMD accessors


def _require(cond: bool, msg: str):
    if not cond:
        raise RepairError(msg)


def uplink_rate_sbs(scenario: Scenario, decision: DecisionVector, i: int) -> float:
    _require(decision.bs[i] >= 1, f"IMD {i} is not associated with an SBS")
    return float(uplink_rates(scenario, decision)[i])


def uplink_rate_mbs(scenario: Scenario, decision: DecisionVector, i: int) -> float:
    _require(decision.bs[i] == 0, f"IMD {i} is not associated with the MBS")
    return float(uplink_rates(scenario, decision)[i])


def sbs_compute_share(scenario: Scenario, decision: DecisionVector, i: int, k: int) -> float:
    _require(decision.bs[i] >= 1, f"IMD {i} is not associated with an SBS")
    return float(compute_shares(scenario, decision)[0][i, k])


def mbs_compute_share(scenario: Scenario, decision: DecisionVector, i: int, k: int) -> float:
    return float(compute_shares(scenario, decision)[1][i, k])


def total_delay(scenario: Scenario, decision: DecisionVector, i: int) -> float:
    return float(evaluate(scenario, decision).delay[i])


def breach_cost(scenario: Scenario, decision: DecisionVector, i: int) -> float:
    return float(breach_costs(scenario, decision)[i])


def total_energy(scenario: Scenario, decision: DecisionVector) -> float:
    return float(evaluate(scenario, decision).total_energy)
