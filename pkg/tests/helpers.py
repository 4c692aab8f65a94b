"""Hand-built scenarios for unit tests."""

from __future__ import annotations

import dataclasses

import numpy as np

from udn_offload.evaluator import DecisionVector
from udn_offload.scenario import Scenario, ScenarioConfig, generate_scenario

SCENARIO_FIELDS = {f.name for f in dataclasses.fields(Scenario)} - {"config"}


def small_scenario(U=2, S=2, K=1, W=1, seed=0, **overrides):
    """Generated scenario with hand-settable arrays via ``overrides``.

    Array overrides (``channel_gain``, ``cluster_of_bs``, ``data_size`` ...)
    replace the generated ones; everything else configures ``ScenarioConfig``.
    """
    arrays = {k: overrides.pop(k) for k in list(overrides) if k in SCENARIO_FIELDS}
    cfg = ScenarioConfig(seed=seed, num_imds=U, num_sbs=S, num_clusters=W,
                         num_tasks_per_imd=K, **overrides)
    sc = generate_scenario(cfg)
    if arrays:
        sc = dataclasses.replace(sc, **{
            k: np.asarray(v, dtype=float) if isinstance(v, (list, tuple)) else v
            for k, v in arrays.items()
        })
    return sc


def decision(sc, bs, channel=None, power=None, offload=None, relay=None, crypto=None):
    U, K = sc.num_imds, sc.num_tasks
    floor = sc.config.data_floor
    return DecisionVector(
        bs=np.asarray(bs, dtype=np.int64),
        crypto=np.asarray(crypto if crypto is not None else np.ones((U, K)), dtype=np.int64),
        channel=np.asarray(channel if channel is not None else np.ones(U), dtype=np.int64),
        power=np.asarray(power if power is not None else np.full(U, 100.0), dtype=float),
        offload=np.asarray(offload if offload is not None else np.full((U, K), floor),
                           dtype=float),
        relay=np.asarray(relay if relay is not None else np.full((U, K), floor), dtype=float),
    )
