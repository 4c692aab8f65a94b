import csv
import logging
import subprocess
import sys

import numpy as np
import pytest

from udn_offload.cli import main
from udn_offload.harness import (
    METRICS_COLUMNS,
    RUNS_COLUMNS,
    TRACE_COLUMNS,
    ExperimentPlan,
    compute_support_ratios,
    run_experiment,
    trace_filename,
)
from udn_offload.kvconfig import ConfigError


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def small_plan(**kw):
    base = dict(sweep_values=(4,), seeds=(0,), algorithms=("CMT",), iterations=5,
                population_size=4)
    base.update(kw)
    return ExperimentPlan(**base)


def test_support_ratio_examples(caplog):
    assert compute_support_ratios([1, 2], [3, 3], [0, 0], [1, 1]) == (1.0, 1.0)
    assert compute_support_ratios([1, 2, 3, 9], [5] * 4, [0] * 4, [1] * 4) == (0.75, 1.0)
    with caplog.at_level(logging.WARNING):
        assert compute_support_ratios([], [], [], []) == (1.0, 1.0)
    assert "empty" in caplog.text


def test_single_row_plan(tmp_path):
    metrics, records = run_experiment(small_plan(), tmp_path)
    rows = read_csv(tmp_path / "metrics.csv")
    assert rows[0] == list(METRICS_COLUMNS) and len(rows) == 2
    assert float(rows[1][METRICS_COLUMNS.index("time_support_ratio")]) == 1.0
    assert read_csv(tmp_path / "runs.csv")[0] == list(RUNS_COLUMNS)
    assert not list((tmp_path / "traces").iterdir())


def test_metrics_are_seed_means(tmp_path):
    plan = small_plan(seeds=(0, 1, 2), algorithms=("IWOA", "CMS"), sweep_values=(3, 5))
    metrics, records = run_experiment(plan, tmp_path)
    assert len(metrics) == 4 and len(records) == 12
    for m in metrics:
        group = [r for r in records if r.algorithm == m.algorithm and r.sweep_value == m.sweep_value]
        assert m.mean_total_energy == pytest.approx(np.mean([r.total_energy for r in group]),
                                                    rel=1e-12)
        assert m.mean_best_fitness == pytest.approx(np.mean([r.fitness for r in group]), rel=1e-12)
        assert 0 <= m.time_support_ratio <= 1 and 0 <= m.cost_support_ratio <= 1
    header = read_csv(tmp_path / "metrics.csv")[0]
    assert header == list(METRICS_COLUMNS)
    trace = tmp_path / "traces" / trace_filename(plan, 3, 1, "IWOA")
    rows = read_csv(trace)
    assert rows[0] == list(TRACE_COLUMNS) and len(rows) == 1 + plan.iterations
    fit = [float(r[1]) for r in rows[1:]]
    assert all(b >= a for a, b in zip(fit, fit[1:]))


def test_rerun_is_byte_identical(tmp_path):
    plan = small_plan(seeds=(3, 4), algorithms=("WOA", "CMT"),
                      sweep_variable="partition_factor", sweep_values=(0.2, 0.8))
    run_experiment(plan, tmp_path / "a")
    run_experiment(plan, tmp_path / "b", workers=2)
    for name in ("metrics.csv", "runs.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    names = sorted(p.name for p in (tmp_path / "a" / "traces").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b" / "traces").iterdir())
    assert "trace_partition_factor-0.2_seed3_WOA.csv" in names


@pytest.mark.parametrize("kwargs", [
    dict(sweep_variable="noise_power"),
    dict(sweep_values=()),
    dict(seeds=()),
    dict(algorithms=("PSO",)),
    dict(scenario={"seed": 3}),
    dict(sweep_values=(40,)),  # more IMDs than SBSs
])
def test_invalid_plans(kwargs):
    with pytest.raises(ConfigError):
        small_plan(**kwargs)


PLAN_TEXT = """\
# tiny plan
sweep_variable = num_imds
sweep_values = 3, 4
seeds = 0, 1
algorithms = IWOA, CMT
iterations = 4
population_size = 4
num_sbs = 12
"""


def test_plan_file(tmp_path):
    path = tmp_path / "p.plan"
    path.write_text(PLAN_TEXT)
    plan = ExperimentPlan.from_file(path)
    assert plan.sweep_values == (3.0, 4.0) and plan.seeds == (0, 1)
    assert plan.algorithms == ("IWOA", "CMT") and plan.scenario == {"num_sbs": 12}
    assert plan.scenario_config(3, 1).num_sbs == 12
    path.write_text(PLAN_TEXT + "warp_factor = 9\n")
    with pytest.raises(ConfigError):
        ExperimentPlan.from_file(path)


def test_cli_run(tmp_path, capsys):
    path = tmp_path / "p.plan"
    path.write_text(PLAN_TEXT)
    out = tmp_path / "out"
    assert main(["run", "--plan", str(path), "--out", str(out), "--threads", "2"]) == 0
    assert len(read_csv(out / "metrics.csv")) == 1 + 4
    assert "metrics.csv" in capsys.readouterr().out


def test_cli_errors(tmp_path, capsys):
    assert main(["run", "--plan", str(tmp_path / "missing.plan"), "--out", str(tmp_path)]) != 0
    bad = tmp_path / "bad.plan"
    bad.write_text("sweep_variable = bogus\n")
    assert main(["run", "--plan", str(bad), "--out", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err
    blocker = tmp_path / "file"
    blocker.write_text("")
    good = tmp_path / "good.plan"
    good.write_text(PLAN_TEXT)
    assert main(["run", "--plan", str(good), "--out", str(blocker / "sub")]) != 0


def test_cli_scenario_dump(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("seed = 4\nnum_imds = 3\n")
    assert main(["scenario-dump", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 0
    rows = read_csv(tmp_path / "d" / "imd_positions.csv")
    assert len(rows) == 4


def test_cli_oracle_check_subprocess():
    res = subprocess.run(
        [sys.executable, "-m", "udn_offload", "oracle-check", "--instances", "3"],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0, res.stderr
    assert res.stdout.startswith("PASS")
