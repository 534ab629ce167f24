"""Epoch-driven learner loop shared by every algorithm.

A learner module exposes ``NAME``, ``SINGLE_PLAYER``, ``THEORY_SLOPE``,
``default_rate(s, d, delta, gamma_scale)``, ``propose(estimate, previous, rate, tol)``
and ``diagnose(estimate, pair, rate)``. ``propose`` only ever sees the estimate
built from the learner's own feedback; the true game is used here for
evaluation alone.
"""

from __future__ import annotations

import importlib
import logging
from collections.abc import Callable
from dataclasses import dataclass, replace
from types import ModuleType
from typing import TYPE_CHECKING

import numpy as np

from ..environment import (
    EpochSchedule,
    EstimatedGame,
    FeedbackModel,
    check_concentration_event,
    estimate_game,
    run_epoch,
)
from ..games import duality_gap
from ..models import EpochRecord, GameMatrix, RunTrace, StrategyPair
from ..solvers import DEFAULT_TOL, SolverError

if TYPE_CHECKING:
    from ..config import ExperimentConfig

logger = logging.getLogger(__name__)

ALGORITHMS = ("pmo_lb", "falcon", "ne_uniform")

RateFunction = Callable[[int, int, float], float]


class EpochError(RuntimeError):
    """A solver failure, tagged with the epoch it happened in."""

    def __init__(self, epoch: int, cause: SolverError):
        self.epoch = epoch
        self.residual = cause.residual
        self.iterations = cause.iterations
        super().__init__(f"epoch {epoch}: {cause}")


@dataclass(frozen=True)
class Proposal:
    """Strategy pair a learner commits to for one epoch."""

    pair: StrategyPair
    rate: float
    residual: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class LearnerState:
    """Loop state before epoch ``epoch`` is played.

    ``estimate`` is built from epoch ``epoch - 1`` (all zero before epoch 1) and
    ``current_pair`` is the pair played in that epoch.
    """

    algorithm: str
    epoch: int
    rows: int
    cols: int
    delta: float
    estimate: EstimatedGame
    trace: RunTrace
    current_pair: StrategyPair | None = None
    rate: float | None = None

    @property
    def d(self) -> int:
        return max(self.rows, self.cols)


def get_learner(name: str) -> ModuleType:
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; expected one of {', '.join(ALGORITHMS)}")
    return importlib.import_module(f".{name}", __package__)


def initial_state(
    algorithm: str, rows: int, cols: int, delta: float, seed: int = 0, diagnostics: bool = False
) -> LearnerState:
    get_learner(algorithm)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    trace = RunTrace(algorithm=algorithm, seed=seed, rows=rows, cols=cols, diagnostics=diagnostics)
    return LearnerState(
        algorithm=algorithm,
        epoch=1,
        rows=rows,
        cols=cols,
        delta=delta,
        estimate=EstimatedGame.zeros(rows, cols),
        trace=trace,
    )


def _stability(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.max(new / old))


def step_epoch(
    state: LearnerState,
    game: GameMatrix,
    model: FeedbackModel,
    schedule: EpochSchedule,
    rng: np.random.Generator,
    *,
    tol: float = DEFAULT_TOL,
    gamma_scale: float = 1.0,
    diagnostics: bool = False,
    rate_fn: RateFunction | None = None,
) -> LearnerState:
    """Commit to a pair from the current estimate, play one epoch and re-estimate.

    Args:
        state: State before epoch ``state.epoch``.
        game: True game; drives the feedback and the recorded duality gap only.
        model: Reward noise.
        schedule: Epoch schedule (truncates the final epoch).
        rng: The run's random stream; consumed only by sampling.
        tol: Solver tolerance.
        gamma_scale: Multiplier on the default learning-rate schedule.
        diagnostics: Record inequality slacks for the epoch.
        rate_fn: Overrides the learner's schedule; ``gamma_scale`` is not applied to it.

    Returns:
        State before the next epoch. The record is appended to ``state.trace``.
    """
    learner = get_learner(state.algorithm)
    s = state.epoch
    t_start, t_end = schedule.truncated_span(s)
    if rate_fn is not None:
        rate = float(rate_fn(s, state.d, state.delta))
    else:
        rate = learner.default_rate(s, state.d, state.delta, gamma_scale)

    try:
        proposal = learner.propose(state.estimate, state.current_pair, rate, tol)
    except SolverError as e:
        logger.error("%s failed in epoch %d: %s", state.algorithm, s, e)
        raise EpochError(s, e) from e
    pair = proposal.pair

    # Evaluation against the true game.
    gap = duality_gap(game, pair)
    if state.current_pair is None:
        stability_row = stability_col = 1.0
        concentration = None
    else:
        stability_row = _stability(pair.row.weights, state.current_pair.row.weights)
        stability_col = _stability(pair.col.weights, state.current_pair.col.weights)
        concentration = check_concentration_event(
            game, state.estimate, state.current_pair, s, state.d, state.delta,
            single_player=learner.SINGLE_PLAYER,
        )

    record = EpochRecord(
        seed=state.trace.seed,
        epoch=s,
        t_start=t_start,
        t_end=t_end,
        gamma_or_alpha=proposal.rate,
        duality_gap=gap,
        solver_residual=proposal.residual,
        solver_iterations=proposal.iterations,
        stability_row=stability_row,
        stability_col=stability_col,
        concentration_ok=True if concentration is None else concentration.holds,
        row_strategy=pair.row.weights.tolist(),
        col_strategy=pair.col.weights.tolist(),
    )
    if diagnostics:
        record.concentration_slack = None if concentration is None else concentration.worst_slack
        record.saddle_slack, record.variance_slack = learner.diagnose(state.estimate, pair, proposal.rate)
    state.trace.append(record)

    counters = run_epoch(pair.row, pair.col, game, model, t_end - t_start + 1, rng)
    logger.debug(
        "%s epoch %d (rounds %d-%d): rate=%.4g gap=%.4e residual=%.2e",
        state.algorithm, s, t_start, t_end, proposal.rate, gap, proposal.residual,
    )
    return replace(
        state,
        epoch=s + 1,
        estimate=estimate_game(counters),
        current_pair=pair,
        rate=proposal.rate,
    )


def run_learner(
    config: ExperimentConfig,
    algorithm: str | None = None,
    seed: int | None = None,
    game: GameMatrix | None = None,
    rate_fn: RateFunction | None = None,
) -> RunTrace:
    """Drive :func:`step_epoch` over rounds ``1..config.total_rounds``."""
    algorithm = algorithm or config.algorithms[0]
    seed = config.seeds[0] if seed is None else seed
    game = game if game is not None else config.build_game()

    schedule = EpochSchedule(config.total_rounds)
    model = FeedbackModel(config.noise, config.noise_sigma)
    rng = np.random.default_rng(seed)
    state = initial_state(algorithm, game.rows, game.cols, config.delta, seed, config.diagnostics)

    for _ in range(schedule.num_epochs):
        state = step_epoch(
            state, game, model, schedule, rng,
            tol=config.solver_tol,
            gamma_scale=config.gamma_scale,
            diagnostics=config.diagnostics,
            rate_fn=rate_fn,
        )

    trace = state.trace
    logger.info(
        "%s seed %d: %d epochs, final gap %.4e",
        algorithm, seed, len(trace.records), trace.records[-1].duality_gap,
    )
    return trace
