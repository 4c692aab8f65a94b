import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from udn_offload.kvconfig import ConfigError
from udn_offload.scenario import (
    KMEANS_MAX_ROUNDS,
    MBS_PATHLOSS,
    SBS_PATHLOSS,
    ScenarioConfig,
    cluster_sbs,
    dump_scenario_csv,
    generate_scenario,
    lloyd,
    pathloss_db,
    spectrum_plan,
)

ARRAYS = ("bs_positions", "imd_positions", "channel_gain", "cluster_of_bs", "data_size",
          "cycles_per_bit", "finance_loss", "risk_coeff", "expected_level", "deadline",
          "max_cost")


def test_same_seed_same_scenario():
    a = generate_scenario(ScenarioConfig(seed=42))
    b = generate_scenario(ScenarioConfig(seed=42))
    for name in ARRAYS:
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes(), name
    c = generate_scenario(ScenarioConfig(seed=43))
    assert not np.array_equal(a.channel_gain, c.channel_gain)


def test_pathloss_at_one_km():
    assert pathloss_db(1000.0, *MBS_PATHLOSS) == pytest.approx(128.1, abs=1e-12)
    assert pathloss_db(1000.0, *SBS_PATHLOSS) == pytest.approx(140.7, abs=1e-12)


def test_degenerate_data_range():
    sc = generate_scenario(ScenarioConfig(seed=3, data_size_range=(1.6e6, 1.6e6)))
    assert np.all(sc.data_size == 1.6e6)


def test_shapes_and_ranges():
    cfg = ScenarioConfig(seed=5)
    sc = generate_scenario(cfg)
    U, S, K = cfg.num_imds, cfg.num_sbs, cfg.num_tasks_per_imd
    assert sc.channel_gain.shape == (U, S + 1)
    assert np.all(sc.channel_gain > 0)
    assert np.all(np.hypot(*sc.bs_positions.T) <= cfg.macrocell_radius)
    assert np.all(np.hypot(*sc.imd_positions.T) <= cfg.macrocell_radius)
    assert sc.cluster_of_bs[0] == 0
    assert set(sc.cluster_of_bs[1:]) == set(range(1, cfg.num_clusters + 1))
    assert np.all(np.isin(sc.expected_level, cfg.expected_level_set))
    # one loss per task index, shared by all IMDs
    assert np.all(sc.finance_loss == sc.finance_loss[0])
    assert sc.data_size.shape == (U, K)
    assert len(sc.crypto_catalog) == 6
    assert not sc.channel_gain.flags.writeable


def test_gain_matches_pathloss_up_to_shadowing():
    sc = generate_scenario(ScenarioConfig(seed=11, num_imds=20))
    dist = sc.distances()
    pl = np.empty_like(dist)
    pl[:, 0] = pathloss_db(dist[:, 0], *MBS_PATHLOSS)
    pl[:, 1:] = pathloss_db(dist[:, 1:], *SBS_PATHLOSS)
    shadow = -10 * np.log10(sc.channel_gain) - pl
    assert abs(shadow.mean()) < 1.0
    assert 7.0 < shadow.std() < 9.0


@pytest.mark.parametrize(
    "eta, expected",
    [(0.5, (1e7, 2)), (0.0, (0.0, 4)), (1.0, (2e7, 1))],
)
def test_spectrum_plan_examples(eta, expected, caplog):
    cfg = ScenarioConfig(partition_factor=eta)
    with caplog.at_level(logging.WARNING):
        assert spectrum_plan(cfg) == expected
    assert bool(caplog.records) == (eta == 1.0)


@pytest.mark.parametrize("kwargs", [
    dict(partition_factor=1.5),
    dict(num_imds=40, num_sbs=30),
    dict(num_clusters=31),
    dict(deadline_range=(10.0, 5.0)),
    dict(noise_power=0.0),
    dict(power_floor=0.0),
    dict(crypto_levels=(1, 1, 2, 3, 4, 5)),
    dict(crypto_energy_cost=(1.0,)),
])
def test_invalid_config_rejected(kwargs):
    with pytest.raises(ConfigError):
        ScenarioConfig(**kwargs)


def test_kmeans_one_cluster_per_point():
    pts = np.random.default_rng(0).uniform(-100, 100, (6, 2))
    ids = cluster_sbs(pts, 6, seed=1)
    assert sorted(ids) == list(range(1, 7))


def test_kmeans_single_cluster():
    pts = np.random.default_rng(0).uniform(-100, 100, (9, 2))
    assert np.all(cluster_sbs(pts, 1, seed=1) == 1)


def _wcss(points, labels):
    return sum(((points[labels == c] - points[labels == c].mean(0)) ** 2).sum()
               for c in np.unique(labels))


@pytest.mark.parametrize("seed", range(10))
def test_kmeans_square_corners(seed):
    pts = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]) * 50.0
    ids = cluster_sbs(pts, 2, seed=seed)
    assert sorted(np.bincount(ids)[1:]) == [2, 2]
    pairings = [np.array(p) for p in ([1, 1, 2, 2], [1, 2, 1, 2], [1, 2, 2, 1])]
    best = min(_wcss(pts, p) for p in pairings)
    assert _wcss(pts, ids) == pytest.approx(best)


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(2, 25),
    k_frac=st.floats(0.0, 1.0),
    seed=st.integers(0, 2**32 - 1),
)
def test_lloyd_inertia_non_increasing_and_partition(n, k_frac, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-500, 500, (n, 2))
    k = 1 + int(k_frac * (n - 1))
    init = pts[rng.choice(n, size=k, replace=False)]
    labels, _, history = lloyd(pts, init)
    assert len(history) <= KMEANS_MAX_ROUNDS
    assert all(b <= a * (1 + 1e-12) + 1e-9 for a, b in zip(history, history[1:]))
    assert set(labels) == set(range(k))
    ids = cluster_sbs(pts, k, seed)
    assert set(ids) == set(range(1, k + 1)) and len(ids) == n


def test_kmeans_rejects_too_many_clusters():
    with pytest.raises(ValueError):
        cluster_sbs(np.zeros((3, 2)), 4, seed=0)


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "s.cfg"
    path.write_text(
        "# custom\nseed = 7\nnum_imds = 4\npartition_factor=0.3\n"
        "deadline_range = 6, 9\nexpected_level_set = 4,5\n"
    )
    cfg = ScenarioConfig.from_file(path)
    assert cfg == ScenarioConfig(seed=7, num_imds=4, partition_factor=0.3,
                                 deadline_range=(6.0, 9.0), expected_level_set=(4, 5))


@pytest.mark.parametrize("text", ["bogus_key = 1\n", "seed 5\n", "seed=1\nseed=2\n",
                                  "num_imds = ten\n"])
def test_config_file_errors(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError):
        ScenarioConfig.from_file(path)


def test_dump_csv(tmp_path):
    sc = generate_scenario(ScenarioConfig(seed=1, num_imds=3, num_sbs=4, num_clusters=2))
    paths = dump_scenario_csv(sc, tmp_path)
    names = {p.name for p in paths}
    assert {"bs_positions.csv", "imd_positions.csv", "channel_gain.csv", "tasks.csv",
            "crypto_catalog.csv", "spectrum.csv"} == names
    lines = (tmp_path / "channel_gain.csv").read_text().splitlines()
    assert lines[0] == "imd,bs,channel_gain" and len(lines) == 1 + 3 * 5
    gain = float(lines[1].split(",")[2])
    assert gain == sc.channel_gain[0, 0]
    tasks = (tmp_path / "tasks.csv").read_text().splitlines()
    assert len(tasks) == 1 + 3 * 3


def test_task_accessor():
    sc = generate_scenario(ScenarioConfig(seed=2))
    t = sc.task(1, 2)
    assert t.data_size == sc.data_size[1, 2]
    assert t.expected_level in (5, 6)


@pytest.mark.parametrize("seed", range(5))
def test_cmt_worst_case_under_deadline(seed):
    sc = generate_scenario(ScenarioConfig(seed=seed))
    local = (sc.data_size * sc.cycles_per_bit).sum(axis=1) / sc.config.f_ue
    assert np.all(local <= 1.2 + 1e-12)
    assert np.all(sc.deadline >= 5.0)

