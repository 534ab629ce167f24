import math

import numpy as np
import pytest

from last_iterate_lab.analysis import (
    AggregateTrace,
    DiagnosticsMissingError,
    FitError,
    aggregate,
    convergence_profile,
    epoch_points,
    fit_power_law,
    fit_slope,
    lemma_report,
)
from last_iterate_lab.config import ExperimentConfig
from last_iterate_lab.environment import EpochSchedule
from last_iterate_lab.games import make_game
from last_iterate_lab.learners import run_learner
from last_iterate_lab.models import EpochRecord, GameMatrix, RunTrace


def _trace(gap_fn, epochs=20, t_min=1000, seed=0, rows=3, cols=3, diagnostics=False):
    """Trace whose gap at each epoch is ``gap_fn`` of the epoch's fit midpoint."""
    trace = RunTrace("pmo_lb", seed, rows, cols, diagnostics=diagnostics)
    for s in range(1, epochs + 1):
        t_start, t_end = EpochSchedule.epoch_span(s)
        mid = (max(t_start, t_min) + t_end) / 2
        trace.append(EpochRecord(
            seed=seed, epoch=s, t_start=t_start, t_end=t_end, gamma_or_alpha=1.0,
            duality_gap=float(gap_fn(mid)), solver_residual=0.0, solver_iterations=0,
            stability_row=1.0, stability_col=1.0, concentration_ok=True,
        ))
    return trace


class TestFitSlope:
    def test_exact_inverse_sqrt(self):
        fit = fit_slope(_trace(lambda t: t ** -0.5), t_min=1000)
        assert fit.slope == pytest.approx(-0.5, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.n_points == 11
        assert fit.t_min == 1000

    def test_exact_quarter_power_intercept(self):
        fit = fit_slope(_trace(lambda t: 3 * t ** -0.25))
        assert fit.slope == pytest.approx(-0.25, abs=1e-10)
        assert fit.intercept == pytest.approx(math.log(3), abs=1e-9)

    def test_perturbed_power_law(self):
        fit = fit_slope(_trace(lambda t: t ** -0.5 * (1 + 0.1 * math.sin(math.log(t)))))
        assert abs(fit.slope + 0.5) <= 0.05

    def test_scale_invariance(self):
        base = fit_slope(_trace(lambda t: t ** -0.5 * (1 + 0.2 * math.cos(t))))
        scaled = fit_slope(_trace(lambda t: 7.5 * t ** -0.5 * (1 + 0.2 * math.cos(t))))
        assert scaled.slope == pytest.approx(base.slope, abs=1e-12)
        assert scaled.intercept == pytest.approx(base.intercept + math.log(7.5), abs=1e-12)

    def test_time_rescaling_by_powers_of_two(self):
        ts = np.array([2.0 ** k * 1.5 for k in range(10, 20)])
        for shift in (1, 4, 10):
            scaled = ts * 2.0 ** shift
            slope, _, _ = fit_power_law(scaled, scaled ** -0.5)
            assert slope == pytest.approx(-0.5, abs=1e-10)

    def test_run_trace_and_aggregate_agree(self):
        trace = _trace(lambda t: 2 * t ** -0.5)
        assert fit_slope(trace).slope == pytest.approx(fit_slope(aggregate([trace])).slope, abs=1e-15)

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_slope(_trace(lambda t: t ** -0.5, epochs=10), t_min=1000)

    def test_nonpositive_gaps_are_excluded_and_counted(self):
        trace = _trace(lambda t: t ** -0.5)
        trace.records[15].duality_gap = 0.0
        fit = fit_slope(trace)
        assert fit.excluded == 1
        assert fit.n_points == 10
        assert fit.slope == pytest.approx(-0.5, abs=1e-10)

    def test_epoch_points_use_clipped_midpoints(self):
        ts, _, _ = epoch_points(_trace(lambda t: 1.0, epochs=11), t_min=1000)
        assert ts.tolist() == [(1000 + 1023) / 2, (1024 + 2047) / 2]


class TestAggregate:
    def test_single_trace(self):
        trace = _trace(lambda t: 1 / t, epochs=6)
        agg = aggregate([trace])
        gaps = [r.duality_gap for r in trace.records]
        assert agg.mean.tolist() == gaps
        assert agg.min.tolist() == gaps
        assert agg.max.tolist() == gaps

    def test_two_traces(self):
        a = _trace(lambda t: 0.2, epochs=3, seed=0)
        b = _trace(lambda t: 0.4, epochs=3, seed=1)
        agg = aggregate([a, b])
        assert agg.mean[1] == pytest.approx(0.3)
        assert agg.min[1] == 0.2
        assert agg.max[1] == 0.4
        assert agg.seeds == [0, 1]

    def test_geometric_mean(self):
        a = _trace(lambda t: 0.1, epochs=3, seed=0)
        b = _trace(lambda t: 0.4, epochs=3, seed=1)
        agg = aggregate([a, b], aggregator="geometric")
        assert agg.mean.tolist() == pytest.approx([0.2] * 3)

    def test_mean_between_min_and_max(self, rng):
        traces = []
        for seed in range(10):
            trace = _trace(lambda t: 1.0, epochs=15, seed=seed)
            for record, factor in zip(trace.records, rng.uniform(0.5, 2.0, size=15)):
                record.duality_gap = factor / record.t_end
            traces.append(trace)
        for aggregator in ("arithmetic", "geometric"):
            agg = aggregate(traces, aggregator)
            assert np.all(agg.min <= agg.mean) and np.all(agg.mean <= agg.max)

    def test_aggregate_then_fit_equals_fit(self):
        traces = [_trace(lambda t: t ** -0.4, seed=s) for s in range(4)]
        assert fit_slope(aggregate(traces)).slope == pytest.approx(fit_slope(traces[0]).slope, abs=1e-12)

    def test_mismatched_traces(self):
        with pytest.raises(ValueError):
            aggregate([_trace(lambda t: 1.0, epochs=4), _trace(lambda t: 1.0, epochs=5, seed=1)])
        with pytest.raises(ValueError):
            aggregate([_trace(lambda t: 1.0, rows=3), _trace(lambda t: 1.0, rows=4, seed=1)])
        with pytest.raises(ValueError):
            aggregate([])
        with pytest.raises(ValueError):
            aggregate([_trace(lambda t: 1.0)], aggregator="median")

    def test_csv_round_trip(self):
        traces = [_trace(lambda t, k=k: (k + 1) * t ** -0.5, epochs=8, seed=k) for k in range(3)]
        agg = aggregate(traces)
        parsed = AggregateTrace.from_csv(agg.to_csv(), "pmo_lb")
        assert parsed.epochs == agg.epochs
        assert parsed.t_end == agg.t_end
        assert parsed.mean.tolist() == agg.mean.tolist()
        assert parsed.seeds == [0, 1, 2]
        assert np.array_equal(parsed.per_seed, agg.per_seed)
        assert agg.to_csv().splitlines()[0] == "epoch,t_start,t_end,mean_gap,min_gap,max_gap,seed_0,seed_1,seed_2"


class TestLemmaReport:
    def test_requires_diagnostics(self):
        with pytest.raises(DiagnosticsMissingError):
            lemma_report(_trace(lambda t: 1.0, epochs=4), d=3)

    def test_injected_stability_violation(self):
        trace = _trace(lambda t: 1.0, epochs=8, diagnostics=True)
        trace.records[4].stability_row = 17 * 3
        report = lemma_report(trace, d=3, delta=0.1)
        assert report.stability_bound == 48
        assert [e.epoch for e in report.epochs if not e.stability_ok] == [5]
        assert report.violations == [5]
        assert not report.all_stability_held
        assert report.summary_line() == "all-epoch stability held: no"

    def test_ratios_recomputed_from_strategies(self):
        trace = _trace(lambda t: 1.0, epochs=3, rows=2, cols=2, diagnostics=True)
        for record, row in zip(trace.records, ([0.5, 0.5], [0.01, 0.99], [0.5, 0.5])):
            record.row_strategy, record.col_strategy = row, [0.5, 0.5]
        report = lemma_report(trace, delta=0.1)
        assert report.d == 2
        assert report.epochs[2].stability_ratio == pytest.approx(50.0)
        assert not report.epochs[2].stability_ok
        assert report.epochs[0].beta is None
        assert report.epochs[1].beta > report.epochs[2].beta

    def test_zero_noise_run_holds_everywhere(self, tmp_path):
        config = ExperimentConfig(
            total_rounds=2 ** 10, seeds=[0], noise="deterministic", diagnostics=True, output_dir=str(tmp_path)
        )
        game = GameMatrix(np.array([[0.5, -0.5], [-0.25, 0.25]]))
        report = lemma_report(run_learner(config, game=game), delta=config.delta)
        assert report.all_stability_held
        assert report.all_concentration_held
        assert report.worst_saddle_slack >= -10 * config.solver_tol
        assert report.summary_line() == "all-epoch stability held: yes"


class TestConvergenceProfile:
    def _two_epoch_trace(self):
        trace = RunTrace("pmo_lb", 0, 2, 2)
        for epoch, (row, col, gap) in enumerate((([1.0, 0.0], [0.0, 1.0], 2.0), ([0.5, 0.5], [0.5, 0.5], 0.0)), 1):
            t_start, t_end = EpochSchedule.epoch_span(epoch)
            trace.append(EpochRecord(
                seed=0, epoch=epoch, t_start=t_start, t_end=t_end, gamma_or_alpha=1.0, duality_gap=gap,
                solver_residual=0.0, solver_iterations=0, stability_row=1.0, stability_col=1.0,
                concentration_ok=True, row_strategy=row, col_strategy=col,
            ))
        return trace

    def test_matching_pennies_profile(self):
        profile = convergence_profile(self._two_epoch_trace(), make_game("matching_pennies"))
        assert profile.last_iterate.tolist() == [2.0, 0.0]
        assert profile.best_iterate.tolist() == [2.0, 0.0]
        assert profile.random_iterate.tolist() == pytest.approx([2.0, 2 / 3])
        assert profile.average_iterate.tolist() == pytest.approx([2.0, 2 / 3])
        assert profile.final()["random_iterate"] == pytest.approx(2 / 3)

    def test_requires_strategies(self):
        with pytest.raises(DiagnosticsMissingError):
            convergence_profile(_trace(lambda t: 1.0, epochs=3), make_game("rock_paper_scissors"))
