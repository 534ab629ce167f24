import json
from pathlib import Path

import matplotlib
import numpy as np
import pytest

from last_iterate_lab.analysis import AggregateTrace, fit_slope
from last_iterate_lab.experiment import (
    FIGURE_NAME,
    SUMMARY_NAME,
    ExperimentRunner,
    aggregate_filename,
    load_trace,
    trace_filename,
)
from last_iterate_lab.plotting import figure_points, plot_convergence


@pytest.fixture
def result_and_runner(small_config):
    runner = ExperimentRunner(small_config)
    result = runner.run()
    runner.write(result)
    return result, runner


def test_jobs_are_sorted(small_config):
    config = small_config.with_overrides(algorithms=["pmo_lb", "ne_uniform"], seeds=[3, 1])
    assert ExperimentRunner(config).jobs == [("ne_uniform", 1), ("ne_uniform", 3), ("pmo_lb", 1), ("pmo_lb", 3)]


def test_writes_every_artifact(result_and_runner, small_config):
    result, _ = result_and_runner
    out = small_config.output_dir
    names = {path.name for path in result.files}
    assert {trace_filename("pmo_lb", 0), trace_filename("pmo_lb", 1), aggregate_filename("pmo_lb"),
            FIGURE_NAME, SUMMARY_NAME, "config.txt"} <= names
    assert "pmo_lb_seed0_strategies.json" in names
    assert all(path.exists() and str(path).startswith(out) for path in result.files)


def test_load_trace_attaches_strategies(result_and_runner, small_config):
    result, _ = result_and_runner
    loaded = load_trace(f"{small_config.output_dir}/{trace_filename('pmo_lb', 1)}")
    original = result.traces[("pmo_lb", 1)]
    assert loaded.algorithm == "pmo_lb"
    assert loaded.seed == 1
    assert (loaded.rows, loaded.cols) == (3, 3)
    assert loaded.to_csv() == original.to_csv()
    assert loaded.records[-1].row_strategy == original.records[-1].row_strategy


def test_summary_matches_aggregate_csv(small_config):
    config = small_config.with_overrides(t_min_fit=16)
    runner = ExperimentRunner(config)
    result = runner.run()
    runner.write(result)
    out = Path(config.output_dir)

    summary = json.loads((out / SUMMARY_NAME).read_text(encoding="utf-8"))
    entry = summary["algorithms"]["pmo_lb"]
    assert entry["theory_slope"] == -0.5
    assert entry["runs"] == 2
    assert summary["game"] == result.game.describe()
    agg = AggregateTrace.from_csv((out / aggregate_filename("pmo_lb")).read_text(encoding="utf-8"), "pmo_lb")
    assert entry["final_mean_gap"] == agg.mean[-1]
    refit = fit_slope(agg, 16)
    assert entry["fit"]["slope"] == refit.slope
    assert entry["fit"]["n_points"] == refit.n_points == 5
    assert set(entry["convergence"]) == {"last_iterate", "best_iterate", "random_iterate", "average_iterate"}


def test_figure_points_are_aggregate_rows(result_and_runner):
    result, _ = result_and_runner
    agg = result.aggregates["pmo_lb"]
    ts, gaps = figure_points(result.aggregates)["pmo_lb"]
    assert ts == [t for t, g in zip(agg.t_end, agg.mean) if g > 0]
    assert gaps == [float(g) for g in agg.mean if g > 0]


def test_parallel_run_matches_serial(small_config):
    serial = ExperimentRunner(small_config).run()
    parallel = ExperimentRunner(small_config.with_overrides(workers=2)).run()
    assert list(serial.traces) == list(parallel.traces)
    for key, trace in serial.traces.items():
        assert trace.to_csv() == parallel.traces[key].to_csv()
    assert np.array_equal(serial.aggregates["pmo_lb"].mean, parallel.aggregates["pmo_lb"].mean)


def test_figure_leaves_global_matplotlib_settings(result_and_runner, tmp_path):
    result, _ = result_and_runner
    first = plot_convergence(result.aggregates, result.fits, tmp_path / "a.svg")
    assert matplotlib.rcParams["svg.hashsalt"] == matplotlib.rcParamsDefault["svg.hashsalt"]
    second = plot_convergence(result.aggregates, result.fits, tmp_path / "b.svg")
    assert first.read_bytes() == second.read_bytes()
