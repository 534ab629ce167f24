"""Baseline: play the minimax solution of the estimated game mixed with uniform exploration."""

import logging

import numpy as np

from ..environment import EstimatedGame
from ..models import Strategy, StrategyPair
from ..solvers import find_equilibrium
from .base import Proposal
from .schedules import alpha_ne_uniform

logger = logging.getLogger(__name__)

NAME = "ne_uniform"
SINGLE_PLAYER = False
THEORY_SLOPE = -0.25

# Duality gap to which the estimated game is solved.
NE_GAP_TOL = 1e-6


def default_rate(s: int, d: int, delta: float, gamma_scale: float = 1.0) -> float:
    # The exploration weight has no learning-rate scale.
    return alpha_ne_uniform(s, d)


def _mix(strategy: Strategy, alpha: float) -> Strategy:
    n = len(strategy)
    return Strategy((1.0 - alpha) * strategy.weights + alpha * np.full(n, 1.0 / n))


def propose(estimate: EstimatedGame, previous: StrategyPair | None, rate: float, tol: float) -> Proposal:
    rows, cols = estimate.shape
    if rate >= 1.0:
        # Fully uniform; the estimated equilibrium carries zero weight.
        return Proposal(StrategyPair.uniform(rows, cols), rate)
    solution = find_equilibrium(estimate.entries, tol=max(tol, NE_GAP_TOL))
    pair = StrategyPair(_mix(solution.pair.row, rate), _mix(solution.pair.col, rate))
    return Proposal(pair, rate, solution.gap, solution.iterations)


def diagnose(estimate: EstimatedGame, pair: StrategyPair, rate: float) -> tuple[None, None]:
    return None, None
