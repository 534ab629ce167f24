"""Payoff-matrix optimism with a log barrier: both players play the saddle
point of the barrier-regularized estimated game."""

import logging

from ..diagnostics import check_game_low_variance, check_saddle_inequality
from ..environment import EstimatedGame
from ..models import StrategyPair
from ..solvers import RegularizedGame, solve_logbarrier_saddle
from .base import Proposal
from .schedules import gamma_pmo_lb

logger = logging.getLogger(__name__)

NAME = "pmo_lb"
SINGLE_PLAYER = False
THEORY_SLOPE = -0.5


def default_rate(s: int, d: int, delta: float, gamma_scale: float = 1.0) -> float:
    return gamma_scale * gamma_pmo_lb(s, d, delta)


def propose(estimate: EstimatedGame, previous: StrategyPair | None, rate: float, tol: float) -> Proposal:
    # Warm start from the previous epoch's pair; the solution is unique either way.
    solution = solve_logbarrier_saddle(RegularizedGame(estimate, rate), tol=tol, init=previous)
    return Proposal(solution.pair, rate, solution.kkt_residual, solution.iterations)


def diagnose(estimate: EstimatedGame, pair: StrategyPair, rate: float) -> tuple[float, float]:
    """Worst slacks of the saddle inequality and of the game low-variance bound."""
    saddle = check_saddle_inequality(pair, estimate, rate)
    variance = check_game_low_variance(pair, estimate, rate)
    if not saddle.holds:
        logger.warning("Saddle inequality violated at cell %s (slack %.3e)", saddle.worst_cell, saddle.worst_slack)
    return saddle.worst_slack, variance.worst_slack
