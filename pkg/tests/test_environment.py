import math

import numpy as np
import pytest

from last_iterate_lab.environment import (
    FEEDBACK_KINDS,
    ConcentrationError,
    EpochSchedule,
    EstimatedGame,
    FeedbackModel,
    PairCounters,
    beta_schedule,
    check_concentration_event,
    estimate_game,
    run_epoch,
)
from last_iterate_lab.games import make_game
from last_iterate_lab.models import DimensionMismatchError, GameMatrix, Strategy, StrategyPair


class TestEpochSchedule:
    def test_first_epoch_is_round_one(self):
        assert EpochSchedule.epoch_span(1) == (1, 1)
        assert EpochSchedule.epoch_length(1) == 1

    def test_spans_partition_rounds(self):
        expected_start = 1
        for s in range(1, 22):
            first, last = EpochSchedule.epoch_span(s)
            assert first == expected_start
            assert last - first + 1 == EpochSchedule.epoch_length(s)
            assert EpochSchedule.epoch_of_round(first) == s
            assert EpochSchedule.epoch_of_round(last) == s
            expected_start = last + 1
        assert expected_start > 2 ** 20

    def test_epoch_of_round_formula(self):
        for t in range(1, 4097):
            assert EpochSchedule.epoch_of_round(t) == math.floor(math.log2(t)) + 1

    def test_truncation(self):
        schedule = EpochSchedule(10)
        assert schedule.num_epochs == 4
        assert schedule.truncated_span(4) == (8, 10)
        assert schedule.truncated_span(3) == (4, 7)
        with pytest.raises(ValueError):
            schedule.truncated_span(5)

    def test_unbounded(self):
        assert EpochSchedule().num_epochs is None
        assert EpochSchedule().truncated_span(30) == (2 ** 29, 2 ** 30 - 1)

    def test_rejects_bad_rounds(self):
        with pytest.raises(ValueError):
            EpochSchedule(0)
        with pytest.raises(ValueError):
            EpochSchedule.epoch_of_round(0)


class TestFeedbackModel:
    @pytest.mark.parametrize("kind", FEEDBACK_KINDS)
    def test_mean_preserved_and_bounded(self, kind, rng):
        model = FeedbackModel(kind, sigma=0.5)
        n = 100_000
        for mean in (-1.0, -0.9, -0.3, 0.0, 0.5, 0.95, 1.0):
            rewards = model.sample(np.full(n, mean), rng)
            assert rewards.min() >= -1.0 and rewards.max() <= 1.0
            assert abs(rewards.mean() - mean) <= 5 * 2 / math.sqrt(n)

    def test_bernoulli_is_plus_minus_one(self, rng):
        rewards = FeedbackModel("bernoulli_pm1").sample(np.full(1000, 0.2), rng)
        assert set(np.unique(rewards)) <= {-1.0, 1.0}

    def test_deterministic_returns_means(self, rng):
        means = np.array([0.1, -0.7])
        assert FeedbackModel("deterministic").sample(means, rng).tolist() == [0.1, -0.7]

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            FeedbackModel("cauchy")
        with pytest.raises(ValueError):
            FeedbackModel("clipped_gaussian", sigma=0.0)


class TestRunEpoch:
    def test_point_masses_deterministic(self, rng):
        game = GameMatrix(np.array([[0.25, -1.0], [0.5, 0.0]]))
        counters = run_epoch(Strategy.pure(2, 0), Strategy.pure(2, 0), game, FeedbackModel("deterministic"), 8, rng)
        assert counters.counts.tolist() == [[8, 0], [0, 0]]
        assert counters.reward_sums[0, 0] == 8 * 0.25
        assert counters.total == 8

    def test_uniform_pair_frequencies(self, rng):
        game = make_game("matching_pennies")
        counters = run_epoch(Strategy.uniform(2), Strategy.uniform(2), game, FeedbackModel(), 100_000, rng)
        assert counters.total == 100_000
        assert np.all(np.abs(counters.counts / 100_000 - 0.25) <= 0.01)
        assert np.all(np.abs(counters.reward_sums) <= counters.counts)

    def test_bernoulli_mean_reward(self, rng):
        game = GameMatrix(np.array([[0.5, 0.0], [0.0, 0.0]]))
        counters = run_epoch(Strategy.pure(2, 0), Strategy.pure(2, 0), game, FeedbackModel("bernoulli_pm1"), 100_000, rng)
        assert abs(counters.reward_sums[0, 0] / 100_000 - 0.5) <= 0.02

    def test_rectangular_and_errors(self, rng):
        game = GameMatrix(np.zeros((3, 1)))
        counters = run_epoch(Strategy.uniform(3), Strategy([1.0]), game, FeedbackModel(), 64, rng)
        assert counters.counts.shape == (3, 1)
        with pytest.raises(DimensionMismatchError):
            run_epoch(Strategy.uniform(2), Strategy([1.0]), game, FeedbackModel(), 4, rng)
        with pytest.raises(ValueError):
            run_epoch(Strategy.uniform(3), Strategy([1.0]), game, FeedbackModel(), 0, rng)

    def test_same_seed_same_counters(self):
        game = make_game("rock_paper_scissors")
        x = Strategy([0.2, 0.3, 0.5])
        a = run_epoch(x, x, game, FeedbackModel(), 5000, np.random.default_rng(4))
        b = run_epoch(x, x, game, FeedbackModel(), 5000, np.random.default_rng(4))
        assert np.array_equal(a.counts, b.counts)
        assert np.array_equal(a.reward_sums, b.reward_sums)


class TestEstimateGame:
    def test_all_zero_counts(self):
        estimate = estimate_game(PairCounters.zeros(2, 3))
        assert estimate.entries.tolist() == [[0.0] * 3] * 2
        assert not estimate.sampled_mask.any()

    def test_arithmetic_mean(self):
        counters = PairCounters.zeros(2, 2)
        counters.counts[0, 1] = 4
        counters.reward_sums[0, 1] = -2.0
        estimate = estimate_game(counters)
        assert estimate.entries[0, 1] == -0.5
        assert estimate.sampled_mask.tolist() == [[False, True], [False, False]]

    def test_zero_noise_reproduces_game(self, rng, fixture_catalog):
        game = fixture_catalog["uniform_rectangular"]
        counters = run_epoch(Strategy.uniform(3), Strategy.uniform(6), game, FeedbackModel("deterministic"), 2000, rng)
        estimate = estimate_game(counters)
        mask = estimate.sampled_mask
        assert mask.any()
        assert np.allclose(estimate.entries[mask], game.entries[mask], rtol=0, atol=1e-12)
        assert (estimate.entries[~mask] == 0).all()


class TestBetaSchedule:
    def test_example_value(self):
        assert beta_schedule(2, 2, 0.1) == pytest.approx(4 * math.sqrt(math.log(1280)), rel=1e-12)
        assert beta_schedule(2, 2, 0.1) == pytest.approx(10.70, abs=0.01)

    def test_single_player_radius(self):
        assert beta_schedule(3, 5, 0.1, single_player=True) == pytest.approx(
            math.sqrt(16 * math.log(8 * 5 * 9 / 0.1) / 2), rel=1e-12
        )

    @pytest.mark.parametrize("d,delta", [(1, 0.5), (2, 0.1), (4, 0.01), (61, 0.1)])
    def test_decreasing_in_epoch(self, d, delta):
        values = [beta_schedule(s, d, delta) for s in range(2, 61)]
        assert all(b < a for a, b in zip(values, values[1:]))
        for a, b in zip(values, values[1:]):
            assert b / a <= 1 / math.sqrt(2) * math.sqrt(1.5)

    def test_smaller_delta_widens(self):
        assert beta_schedule(5, 3, 0.025) > beta_schedule(5, 3, 0.1)

    def test_errors(self):
        with pytest.raises(ValueError):
            beta_schedule(1, 2, 0.1)
        with pytest.raises(ValueError):
            beta_schedule(2, 2, 1.0)


class TestConcentrationEvent:
    def test_holds_with_exact_estimate(self, rng):
        game = make_game("uniform_random", d=3, rng=rng)
        counters = run_epoch(Strategy.uniform(3), Strategy.uniform(3), game, FeedbackModel("deterministic"), 1000, rng)
        report = check_concentration_event(game, estimate_game(counters), StrategyPair.uniform(3, 3), 11, 3, 0.1)
        assert report.holds
        assert report.worst_slack > 0

    def test_corrupted_cell_is_reported(self):
        game = GameMatrix(np.array([[0.5, -0.5], [0.0, 0.25]]))
        entries = game.entries.copy()
        entries[1, 0] += 2.0
        estimate = EstimatedGame(entries, np.ones((2, 2), dtype=bool))
        report = check_concentration_event(game, estimate, StrategyPair.uniform(2, 2), 20, 2, 0.1)
        assert not report.holds
        assert report.worst_cell == (1, 0)
        assert report.worst_slack < 0

    def test_zero_weight_previous_pair(self, rps_game):
        with pytest.raises(ConcentrationError):
            check_concentration_event(
                rps_game, EstimatedGame.zeros(3, 3), StrategyPair(Strategy.pure(3, 0), Strategy.uniform(3)), 2, 3, 0.1
            )

    def test_shape_mismatch(self, rps_game):
        with pytest.raises(DimensionMismatchError):
            check_concentration_event(rps_game, EstimatedGame.zeros(2, 2), StrategyPair.uniform(3, 3), 2, 3, 0.1)

    @staticmethod
    def _event_rate(runs, s, delta=0.1):
        game = make_game("uniform_random", d=3, rng=np.random.default_rng(0))
        x, y = Strategy([0.2, 0.3, 0.5]), Strategy([0.6, 0.2, 0.2])
        held = 0
        for seed in range(runs):
            rng = np.random.default_rng(seed)
            counters = run_epoch(x, y, game, FeedbackModel("bernoulli_pm1"), EpochSchedule.epoch_length(s - 1), rng)
            held += check_concentration_event(game, estimate_game(counters), StrategyPair(x, y), s, 3, delta).holds
        return held / runs

    @pytest.mark.parametrize("s", [4, 8, 12])
    def test_event_probability(self, s):
        assert self._event_rate(200, s) >= 0.9

    @pytest.mark.slow
    @pytest.mark.parametrize("s", [4, 8, 12, 16])
    def test_event_probability_many_runs(self, s):
        assert self._event_rate(1000, s) >= 0.9
