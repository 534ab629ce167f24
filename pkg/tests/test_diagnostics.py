import math

import numpy as np
import pytest

from last_iterate_lab.diagnostics import (
    check_game_low_variance,
    check_low_regret_low_variance,
    check_saddle_inequality,
    regret_estimates,
)
from last_iterate_lab.environment import EstimatedGame
from last_iterate_lab.models import DimensionMismatchError, Strategy, StrategyPair
from last_iterate_lab.solvers import RegularizedGame, solve_igw, solve_logbarrier_saddle

TOL = 1e-9


def test_regret_estimates():
    estimates = regret_estimates([0.5, -0.25, 1.0], true_loss=[0.0, 0.1, -0.2])
    assert estimates.estimated_regret.tolist() == [0.75, 0.0, 1.25]
    assert estimates.true_regret.tolist() == pytest.approx([0.2, 0.3, 0.0])
    assert regret_estimates([1.0, 2.0]).true_regret is None


class TestLowRegretLowVariance:
    def test_zero_loss_saturates_variance_bound(self):
        x = solve_igw(np.zeros(4), 0.3, TOL)
        report = check_low_regret_low_variance(x, np.zeros(4), 0.3)
        assert report.estimated_regret == pytest.approx(0.0, abs=1e-15)
        assert report.variance_slack == pytest.approx(np.zeros(4), abs=1e-12)
        assert report.holds

    def test_two_action_closed_form(self):
        x = Strategy([2 / (1 + math.sqrt(5)), 2 / (3 + math.sqrt(5))])
        report = check_low_regret_low_variance(x, [0.0, 1.0], 1.0)
        assert report.regret_bound_ok
        assert report.regret_bound_slack == pytest.approx([0.0, 0.0], abs=1e-12)
        assert report.regret_slack > 0

    @staticmethod
    def _sweep(instances, seed):
        rng = np.random.default_rng(seed)
        failures = 0
        for _ in range(instances):
            d = int(rng.integers(2, 11))
            loss = rng.uniform(-1, 1, size=d)
            gamma = float(np.exp(rng.uniform(np.log(1e-3), np.log(10.0))))
            report = check_low_regret_low_variance(solve_igw(loss, gamma, TOL), loss, gamma)
            assert report.implication_ok
            failures += not report.holds
        return failures

    def test_random_sweep(self):
        assert self._sweep(1000, seed=0) == 0

    def test_violation_is_reported(self):
        report = check_low_regret_low_variance(Strategy([0.999, 0.001]), [1.0, 0.0], 0.01)
        assert not report.regret_ok
        assert not report.regret_bound_ok

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            check_low_regret_low_variance(Strategy.uniform(3), [0.0, 1.0], 1.0)


class TestGameLowVariance:
    def test_zero_estimate_is_tight(self):
        pair = StrategyPair.uniform(3, 3)
        report = check_game_low_variance(pair, EstimatedGame.zeros(3, 3), 2.0)
        assert report.holds
        assert np.allclose(report.slack, 0.0, atol=1e-12)
        assert "diagnostic only" in report.note

    def test_matching_pennies(self):
        payoff = np.array([[1.0, -1.0], [-1.0, 1.0]])
        solution = solve_logbarrier_saddle(RegularizedGame(payoff, 1.0), TOL)
        report = check_game_low_variance(solution.pair, payoff, 1.0)
        assert report.holds
        assert report.slack[0, 1] > 0 and report.slack[1, 0] > 0
        assert report.estimated_gaps.tolist() == [[2.0, 2.0], [2.0, 2.0]]

    def test_random_sweep(self, rng):
        for _ in range(500):
            rows, cols = (int(v) for v in rng.integers(1, 7, size=2))
            payoff = rng.uniform(-1, 1, size=(rows, cols))
            gamma = float(np.exp(rng.uniform(np.log(1e-2), np.log(10.0))))
            solution = solve_logbarrier_saddle(RegularizedGame(payoff, gamma), TOL)
            assert check_game_low_variance(solution.pair, payoff, gamma).holds


class TestSaddleInequality:
    def test_square_game_is_tight(self, rng):
        payoff = rng.uniform(-1, 1, size=(4, 4))
        solution = solve_logbarrier_saddle(RegularizedGame(payoff, 0.25), TOL)
        report = check_saddle_inequality(solution.pair, payoff, 0.25)
        assert report.holds
        assert np.allclose(report.slack, 0.0, atol=10 * TOL)

    def test_uniform_pair_violates_for_small_gamma(self):
        payoff = np.array([[0.0, -1.0], [1.0, 0.0]])
        report = check_saddle_inequality(StrategyPair.uniform(2, 2), payoff, 1e-3)
        assert not report.holds
        assert report.worst_slack < 0
        assert report.worst_cell == (0, 0)
