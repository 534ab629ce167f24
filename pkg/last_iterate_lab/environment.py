"""Repeated-play environment: doubling epochs, noisy feedback and empirical estimates."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import truncnorm

from .games import sample_actions
from .models import DimensionMismatchError, GameMatrix, Strategy, StrategyPair

logger = logging.getLogger(__name__)

FEEDBACK_KINDS = ("bernoulli_pm1", "clipped_gaussian", "deterministic")

# Rounds simulated per vectorized block; bounds memory for long epochs.
CHUNK_ROUNDS = 1 << 20


class ConcentrationError(ValueError):
    """The concentration bound is undefined for the given previous pair."""


@dataclass(frozen=True)
class EpochSchedule:
    """Doubling schedule: epoch ``s`` covers rounds ``2^(s-1) .. 2^s - 1``.

    ``total_rounds`` truncates the last epoch; ``None`` means unbounded.
    """

    total_rounds: int | None = None

    def __post_init__(self):
        if self.total_rounds is not None and self.total_rounds < 1:
            raise ValueError(f"total_rounds must be >= 1, got {self.total_rounds}")

    @staticmethod
    def epoch_of_round(t: int) -> int:
        if t < 1:
            raise ValueError(f"rounds start at 1, got {t}")
        return int(t).bit_length()

    @staticmethod
    def epoch_span(s: int) -> tuple[int, int]:
        if s < 1:
            raise ValueError(f"epochs start at 1, got {s}")
        return 1 << (s - 1), (1 << s) - 1

    @staticmethod
    def epoch_length(s: int) -> int:
        return 1 << (s - 1)

    @property
    def num_epochs(self) -> int | None:
        return None if self.total_rounds is None else self.epoch_of_round(self.total_rounds)

    def truncated_span(self, s: int) -> tuple[int, int]:
        first, last = self.epoch_span(s)
        if self.total_rounds is not None:
            if first > self.total_rounds:
                raise ValueError(f"epoch {s} starts after round {self.total_rounds}")
            last = min(last, self.total_rounds)
        return first, last


@dataclass(frozen=True)
class FeedbackModel:
    """Reward noise with conditional mean exactly ``A[i, j]`` and support in [-1, 1]."""

    kind: str = "bernoulli_pm1"
    sigma: float = 0.5

    def __post_init__(self):
        if self.kind not in FEEDBACK_KINDS:
            raise ValueError(f"unknown feedback model {self.kind!r}; expected one of {', '.join(FEEDBACK_KINDS)}")
        if self.kind == "clipped_gaussian" and not self.sigma > 0:
            raise ValueError(f"clipped_gaussian needs sigma > 0, got {self.sigma}")

    def sample(self, means: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One reward per entry of ``means``."""
        means = np.asarray(means, dtype=float)
        if self.kind == "deterministic":
            return means.copy()
        if self.kind == "bernoulli_pm1":
            return np.where(rng.random(means.shape) < (1.0 + means) / 2.0, 1.0, -1.0)
        # Symmetric truncation keeps the mean; half-width shrinks near the boundary.
        half_width = np.minimum(self.sigma, 1.0 - np.abs(means))
        ratio = half_width / self.sigma
        active = ratio > 0
        safe = np.where(active, ratio, 1.0)
        z = truncnorm.rvs(-safe, safe, size=means.shape, random_state=rng)
        noise = np.where(active, z * self.sigma, 0.0)
        return np.clip(means + noise, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class PairCounters:
    """Per-pair sample counts ``n_{s,ij}`` and reward sums of one epoch."""

    counts: np.ndarray
    reward_sums: np.ndarray

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "PairCounters":
        return cls(np.zeros((rows, cols), dtype=np.int64), np.zeros((rows, cols)))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class EstimatedGame:
    """Empirical-mean game estimate; unsampled entries are exactly zero."""

    entries: np.ndarray
    sampled_mask: np.ndarray

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "EstimatedGame":
        return cls(np.zeros((rows, cols)), np.zeros((rows, cols), dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def run_epoch(
    row_strategy: Strategy,
    col_strategy: Strategy,
    game: GameMatrix,
    model: FeedbackModel,
    length: int,
    rng: np.random.Generator,
) -> PairCounters:
    """Play ``length`` rounds with both players sampling independently each round."""
    if length < 1:
        raise ValueError(f"epoch length must be >= 1, got {length}")
    StrategyPair(row_strategy, col_strategy).check_dims(game.shape)

    rows, cols = game.shape
    counts = np.zeros(rows * cols, dtype=np.int64)
    sums = np.zeros(rows * cols)
    remaining = length
    while remaining > 0:
        block = min(remaining, CHUNK_ROUNDS)
        i = sample_actions(row_strategy, rng, block)
        j = sample_actions(col_strategy, rng, block)
        rewards = model.sample(game.entries[i, j], rng)
        flat = i * cols + j
        counts += np.bincount(flat, minlength=rows * cols)
        sums += np.bincount(flat, weights=rewards, minlength=rows * cols)
        remaining -= block

    return PairCounters(counts.reshape(rows, cols), sums.reshape(rows, cols))


def estimate_game(counters: PairCounters) -> EstimatedGame:
    """Empirical mean per pair, zero where the pair was never sampled."""
    mask = counters.counts > 0
    entries = np.zeros(counters.counts.shape)
    np.divide(counters.reward_sums, counters.counts, out=entries, where=mask)
    return EstimatedGame(np.clip(entries, -1.0, 1.0), mask)


def beta_schedule(s: int, d: int, delta: float, single_player: bool = False) -> float:
    """Concentration radius for the estimate built from epoch ``s - 1``.

    Game case: ``sqrt(16 log(8 d^2 s^2 / delta) / 2^(s-2))``; the single-player
    case replaces ``d^2`` by ``d``. Natural logarithm throughout.
    """
    if s < 2:
        raise ValueError(f"beta_schedule needs s >= 2, got {s}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    pairs = d if single_player else d * d
    return math.sqrt(16.0 * math.log(8.0 * pairs * s * s / delta) / 2.0 ** (s - 2))


@dataclass(frozen=True)
class ConcentrationReport:
    holds: bool
    beta: float
    worst_cell: tuple[int, int]
    worst_slack: float


def check_concentration_event(
    game: GameMatrix,
    estimate: EstimatedGame,
    prev_pair: StrategyPair,
    s: int,
    d: int,
    delta: float,
    single_player: bool = False,
) -> ConcentrationReport:
    """Check ``|Â_ij - A_ij| <= beta_s / sqrt(x_{s-1,i} y_{s-1,j})`` for every cell.

    Args:
        game: True game (evaluation only).
        estimate: Estimate built from epoch ``s - 1``.
        prev_pair: Pair played in epoch ``s - 1``; must be strictly positive.
        s: Epoch index the estimate is used in (``>= 2``).
        d: Effective dimension.
        delta: Confidence parameter.
        single_player: Use the single-player radius.

    Returns:
        Whether the event holds, with the cell of smallest slack.
    """
    if estimate.shape != game.shape:
        raise DimensionMismatchError("estimate", game.shape, estimate.shape)
    prev_pair.check_dims(game.shape)
    if not prev_pair.is_interior:
        raise ConcentrationError(f"previous pair of epoch {s - 1} has a zero weight; the bound is undefined")

    beta = beta_schedule(s, d, delta, single_player=single_player)
    radius = beta / np.sqrt(np.outer(prev_pair.row.weights, prev_pair.col.weights))
    slack = radius - np.abs(estimate.entries - game.entries)
    i, j = np.unravel_index(int(np.argmin(slack)), slack.shape)
    worst = float(slack[i, j])
    return ConcentrationReport(holds=worst >= 0.0, beta=beta, worst_cell=(int(i), int(j)), worst_slack=worst)
