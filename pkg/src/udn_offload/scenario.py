"""Simulation world: topology, channel gains, SBS clusters, spectrum plan, tasks.

Index conventions used throughout the package:

* base stations are indexed ``0..S`` where ``0`` is the macro BS (MBS) and
  ``1..S`` are small BSs (SBSs);
* IMDs are indexed ``0..U-1`` and tasks ``0..K-1`` (array positions);
* cluster ids, channel ids and crypto-algorithm ids are 1-based, as are the
  corresponding genes of a decision vector.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .kvconfig import ConfigError, coerce_fields, read_kv

log = logging.getLogger(__name__)

DEFAULT_ENCRYPT_COST = (100.0, 200.0, 250.0, 300.0, 350.0, 1050.0)
DEFAULT_DECRYPT_COST = (90.0, 280.0, 350.0, 300.0, 400.0, 1700.0)
DEFAULT_ENERGY_COST = tuple(
    v * 1e-7 for v in (2.5296, 5.0425, 6.837, 7.8528, 8.7073, 26.3643)
)
DEFAULT_LEVELS = (1, 2, 3, 4, 5, 6)

MBS_PATHLOSS = (128.1, 37.6)
SBS_PATHLOSS = (140.7, 36.7)
SHADOWING_STD_DB = 8.0
KMEANS_MAX_ROUNDS = 100
KMEANS_RESTARTS = 8


@dataclass(frozen=True)
class CryptoProfile:
    level: int
    encrypt_cost: float  # cycles/bit
    decrypt_cost: float  # cycles/bit
    energy_cost: float  # J/bit


@dataclass(frozen=True)
class TaskSpec:
    data_size: float
    cycles_per_bit: float
    finance_loss: float
    risk_coeff: float
    expected_level: int


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    num_imds: int = 10
    num_sbs: int = 30
    num_clusters: int = 5
    num_tasks_per_imd: int = 3
    system_bandwidth: float = 2.0e7  # Hz
    subchannel_bandwidth: float = 1.0e6  # Hz
    partition_factor: float = 0.5
    noise_power: float = 1e-11  # mW
    max_power: float = 199.526  # mW (23 dBm)
    power_floor: float = 1e-20  # mW
    data_floor: float = 1e-20  # bits
    backhaul_rate: float = 1e9  # bits/s
    f_bs: float = 2.0e10  # cycles/s
    f_ue: float = 1.0e9  # cycles/s
    energy_coeff: float = 1e-25  # J s^2 / cycle^3
    macrocell_radius: float = 500.0  # m
    deadline_range: tuple[float, float] = (5.0, 10.0)
    data_size_range: tuple[float, float] = (1.6e6, 4.0e6)
    cycles_per_bit_range: tuple[float, float] = (50.0, 100.0)
    finance_loss_range: tuple[float, float] = (1.0, 5.0)
    max_breach_cost_range: tuple[float, float] = (5.0, 10.0)
    risk_coeff_range: tuple[float, float] = (1.0, 3.0)
    expected_level_set: tuple[int, ...] = (5, 6)
    crypto_levels: tuple[int, ...] = DEFAULT_LEVELS
    crypto_encrypt_cost: tuple[float, ...] = DEFAULT_ENCRYPT_COST
    crypto_decrypt_cost: tuple[float, ...] = DEFAULT_DECRYPT_COST
    crypto_energy_cost: tuple[float, ...] = DEFAULT_ENERGY_COST

    def __post_init__(self):
        problems = []
        if not 0.0 <= self.partition_factor <= 1.0:
            problems.append("partition_factor must lie in [0, 1]")
        for name in ("num_imds", "num_sbs", "num_clusters", "num_tasks_per_imd"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if self.num_sbs < self.num_imds:
            problems.append("num_sbs must be >= num_imds")
        if self.num_clusters > self.num_sbs:
            problems.append("num_clusters must be <= num_sbs")
        for f in fields(self):
            if f.name.endswith("_range"):
                lo, hi = getattr(self, f.name)
                if lo > hi:
                    problems.append(f"{f.name}: min {lo} exceeds max {hi}")
        for name in (
            "power_floor", "data_floor", "noise_power", "subchannel_bandwidth",
            "system_bandwidth", "f_bs", "f_ue", "backhaul_rate", "macrocell_radius",
        ):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0")
        if self.energy_coeff < 0:
            problems.append("energy_coeff must be >= 0")
        if self.power_floor > self.max_power:
            problems.append("power_floor exceeds max_power")
        if not self.expected_level_set:
            problems.append("expected_level_set is empty")
        n = len(self.crypto_levels)
        if n == 0:
            problems.append("crypto catalog is empty")
        for name in ("crypto_encrypt_cost", "crypto_decrypt_cost", "crypto_energy_cost"):
            values = getattr(self, name)
            if len(values) != n:
                problems.append(f"{name} has {len(values)} entries, expected {n}")
            elif any(v <= 0 for v in values):
                problems.append(f"{name} entries must be > 0")
        if any(b <= a for a, b in zip(self.crypto_levels, self.crypto_levels[1:])):
            problems.append("crypto_levels must be strictly increasing")
        if problems:
            raise ConfigError("; ".join(problems))

    @classmethod
    def from_file(cls, path: str | Path) -> ScenarioConfig:
        return cls(**coerce_fields(cls, read_kv(path)))

    def crypto_catalog(self) -> tuple[CryptoProfile, ...]:
        return tuple(
            CryptoProfile(lvl, enc, dec, en)
            for lvl, enc, dec, en in zip(
                self.crypto_levels,
                self.crypto_encrypt_cost,
                self.crypto_decrypt_cost,
                self.crypto_energy_cost,
            )
        )


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable world description; all arrays are read-only.

    ``channel_gain[i, s]`` is the linear power gain between IMD ``i`` and BS
    ``s`` (``s = 0`` is the MBS). ``cluster_of_bs[s]`` is the 1-based cluster
    of SBS ``s`` and ``0`` for the MBS.
    """

    config: ScenarioConfig
    bs_positions: np.ndarray  # (S+1, 2) m
    imd_positions: np.ndarray  # (U, 2) m
    channel_gain: np.ndarray  # (U, S+1)
    cluster_of_bs: np.ndarray  # (S+1,)
    mbs_bandwidth: float
    num_subchannels: int
    data_size: np.ndarray  # (U, K) bits
    cycles_per_bit: np.ndarray  # (U, K)
    finance_loss: np.ndarray  # (U, K) k$
    risk_coeff: np.ndarray  # (U, K)
    expected_level: np.ndarray  # (U, K)
    deadline: np.ndarray  # (U,) s
    max_cost: np.ndarray  # (U,) k$
    crypto_catalog: tuple[CryptoProfile, ...] = field(default=())

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, np.ndarray):
                object.__setattr__(self, f.name, _frozen(value))
        cat = self.crypto_catalog or self.config.crypto_catalog()
        object.__setattr__(self, "crypto_catalog", tuple(cat))
        object.__setattr__(self, "crypto_level", _frozen([c.level for c in cat]))
        object.__setattr__(self, "encrypt_cost", _frozen([c.encrypt_cost for c in cat]))
        object.__setattr__(self, "decrypt_cost", _frozen([c.decrypt_cost for c in cat]))
        object.__setattr__(self, "energy_cost", _frozen([c.energy_cost for c in cat]))

    @property
    def num_imds(self) -> int:
        return self.channel_gain.shape[0]

    @property
    def num_sbs(self) -> int:
        return self.channel_gain.shape[1] - 1

    @property
    def num_tasks(self) -> int:
        return self.data_size.shape[1]

    @property
    def num_crypto(self) -> int:
        return len(self.crypto_catalog)

    def task(self, i: int, k: int) -> TaskSpec:
        return TaskSpec(
            data_size=float(self.data_size[i, k]),
            cycles_per_bit=float(self.cycles_per_bit[i, k]),
            finance_loss=float(self.finance_loss[i, k]),
            risk_coeff=float(self.risk_coeff[i, k]),
            expected_level=int(self.expected_level[i, k]),
        )

    def distances(self) -> np.ndarray:
        diff = self.imd_positions[:, None, :] - self.bs_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


def spectrum_plan(config: ScenarioConfig) -> tuple[float, int]:
    """Return ``(mbs_bandwidth, N)``: the macro band width and subchannels per cluster."""
    eta = config.partition_factor
    raw = (1.0 - eta) * config.system_bandwidth / (
        config.subchannel_bandwidth * config.num_clusters
    )
    n = int(math.floor(raw + 0.5))
    if n < 1:
        log.warning(
            "partition_factor=%g leaves the SBS tier %g subchannels; using N=1",
            eta, raw,
        )
        n = 1
    return eta * config.system_bandwidth, n


def pathloss_db(distance_m, intercept: float, slope: float):
    return intercept + slope * np.log10(np.asarray(distance_m) / 1000.0)


def _inertia(points, labels, centroids) -> float:
    d = points - centroids[labels]
    return float(np.sum(d * d))


def lloyd(points: np.ndarray, centroids: np.ndarray, max_rounds: int = KMEANS_MAX_ROUNDS):
    """Plain Lloyd iterations from the given centroids.

    Returns ``(labels, centroids, history)`` where ``history`` is the
    within-cluster sum of squares after every round. Labels are 0-based here.
    Equidistant points go to the lowest cluster index; an empty cluster is
    re-seeded with the point farthest from its current centroid.
    """
    points = np.asarray(points, dtype=float)
    centroids = np.array(centroids, dtype=float)
    k = len(centroids)
    labels = None
    history = []
    for _ in range(max_rounds):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            own = d2[np.arange(len(points)), new_labels]
            donors = counts[new_labels] > 1
            far = int(np.argmax(np.where(donors, own, -1.0)))
            counts[new_labels[far]] -= 1
            new_labels[far] = empty
            counts[empty] = 1
        for c in range(k):
            centroids[c] = points[new_labels == c].mean(axis=0)
        history.append(_inertia(points, new_labels, centroids))
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
    return new_labels, centroids, history


def cluster_sbs(positions, n_clusters: int, seed: int) -> np.ndarray:
    """K-means clustering of SBS positions; returns 1-based cluster ids.

    Runs several Lloyd restarts (one from a coordinate-sorted spread of the
    points, the rest from centroids drawn with the seeded stream) and keeps the
    lowest within-cluster sum of squares; earlier restarts win ties.
    """
    points = np.asarray(positions, dtype=float)
    n = len(points)
    if not 1 <= n_clusters <= n:
        raise ValueError(f"need 1 <= W <= number of SBSs, got W={n_clusters}, S={n}")
    rng = np.random.default_rng(seed)
    order = np.lexsort((points[:, 1], points[:, 0]))
    spread = order[(np.arange(n_clusters) * n) // n_clusters]
    inits = [points[spread]]
    for _ in range(KMEANS_RESTARTS - 1):
        inits.append(points[rng.choice(n, size=n_clusters, replace=False)])
    best = None
    for init in inits:
        labels, centroids, history = lloyd(points, init)
        if best is None or history[-1] < best[0]:
            best = (history[-1], labels)
    return best[1] + 1


def _uniform_disc(rng, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def generate_scenario(config: ScenarioConfig) -> Scenario:
    """Build the world for ``config``; a pure function of the config and its seed."""
    rng = np.random.default_rng(config.seed)
    U, S, K = config.num_imds, config.num_sbs, config.num_tasks_per_imd
    R = config.macrocell_radius

    sbs = _uniform_disc(rng, S, R)
    bs_positions = np.vstack(([0.0, 0.0], sbs))
    imds = np.empty((U, 2))
    for i in range(U):
        while True:
            p = _uniform_disc(rng, 1, R)[0]
            if np.all(np.hypot(*(bs_positions - p).T) > 0.0):
                break
        imds[i] = p

    diff = imds[:, None, :] - bs_positions[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    pl = np.empty_like(dist)
    pl[:, 0] = pathloss_db(dist[:, 0], *MBS_PATHLOSS)
    pl[:, 1:] = pathloss_db(dist[:, 1:], *SBS_PATHLOSS)
    shadow = rng.normal(0.0, SHADOWING_STD_DB, size=dist.shape)
    gain = 10.0 ** (-(pl + shadow) / 10.0)

    cluster_seed = int(rng.integers(0, 2**63 - 1))
    clusters = np.concatenate(([0], cluster_sbs(sbs, config.num_clusters, cluster_seed)))

    def draw(lo_hi, size):
        lo, hi = lo_hi
        return rng.uniform(lo, hi, size=size)

    data_size = draw(config.data_size_range, (U, K))
    cycles = draw(config.cycles_per_bit_range, (U, K))
    finance = np.broadcast_to(draw(config.finance_loss_range, K), (U, K)).copy()
    risk = draw(config.risk_coeff_range, (U, K))
    levels = rng.choice(np.asarray(config.expected_level_set), size=(U, K))
    deadline = draw(config.deadline_range, U)
    max_cost = draw(config.max_breach_cost_range, U)

    mbs_bw, n_sub = spectrum_plan(config)
    return Scenario(
        config=config,
        bs_positions=bs_positions,
        imd_positions=imds,
        channel_gain=gain,
        cluster_of_bs=clusters,
        mbs_bandwidth=mbs_bw,
        num_subchannels=n_sub,
        data_size=data_size,
        cycles_per_bit=cycles,
        finance_loss=finance,
        risk_coeff=risk,
        expected_level=levels,
        deadline=deadline,
        max_cost=max_cost,
    )


def dump_scenario_csv(scenario: Scenario, out_dir: str | Path) -> list[Path]:
    """Write positions, gains, clusters and tasks as one CSV per table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def write(name, header, rows):
        path = out / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        written.append(path)

    write(
        "bs_positions.csv", ["bs", "x", "y", "cluster_of_sbs"],
        ([s, repr(float(x)), repr(float(y)), int(scenario.cluster_of_bs[s])]
         for s, (x, y) in enumerate(scenario.bs_positions)),
    )
    write(
        "imd_positions.csv", ["imd", "x", "y", "deadline", "max_cost"],
        ([i, repr(float(x)), repr(float(y)), repr(float(scenario.deadline[i])),
          repr(float(scenario.max_cost[i]))]
         for i, (x, y) in enumerate(scenario.imd_positions)),
    )
    write(
        "channel_gain.csv", ["imd", "bs", "channel_gain"],
        ([i, s, repr(float(g))] for (i, s), g in np.ndenumerate(scenario.channel_gain)),
    )
    write(
        "tasks.csv",
        ["imd", "task", "data_size", "cycles_per_bit", "finance_loss", "risk_coeff",
         "expected_level"],
        ([i, k, repr(t.data_size), repr(t.cycles_per_bit), repr(t.finance_loss),
          repr(t.risk_coeff), t.expected_level]
         for i in range(scenario.num_imds) for k in range(scenario.num_tasks)
         for t in [scenario.task(i, k)]),
    )
    write(
        "crypto_catalog.csv", ["algorithm", "level", "encrypt_cost", "decrypt_cost",
                               "energy_cost"],
        ([l + 1, c.level, repr(c.encrypt_cost), repr(c.decrypt_cost), repr(c.energy_cost)]
         for l, c in enumerate(scenario.crypto_catalog)),
    )
    write(
        "spectrum.csv", ["mbs_bandwidth", "num_subchannels"],
        [[repr(scenario.mbs_bandwidth), scenario.num_subchannels]],
    )
    return written
