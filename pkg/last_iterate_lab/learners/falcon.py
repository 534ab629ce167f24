"""Single-player inverse gap weighting on a d x 1 game: the row player faces a
fixed loss vector and the column player has one action."""

import logging

from ..diagnostics import check_low_regret_low_variance
from ..environment import EstimatedGame
from ..models import DimensionMismatchError, Strategy, StrategyPair
from ..solvers import solve_igw
from .base import Proposal
from .schedules import gamma_falcon

logger = logging.getLogger(__name__)

NAME = "falcon"
SINGLE_PLAYER = True
THEORY_SLOPE = -0.5

_SOLE_ACTION = Strategy([1.0])


def default_rate(s: int, d: int, delta: float, gamma_scale: float = 1.0) -> float:
    return gamma_scale * gamma_falcon(s, d, delta)


def _loss(estimate: EstimatedGame):
    rows, cols = estimate.shape
    if cols != 1:
        raise DimensionMismatchError("falcon game", (rows, 1), (rows, cols))
    return estimate.entries[:, 0]


def propose(estimate: EstimatedGame, previous: StrategyPair | None, rate: float, tol: float) -> Proposal:
    x = solve_igw(_loss(estimate), rate, tol)
    return Proposal(StrategyPair(x, _SOLE_ACTION), rate)


def diagnose(estimate: EstimatedGame, pair: StrategyPair, rate: float) -> tuple[float, float]:
    """Worst slacks of the estimated-regret bound and of the low-variance bound."""
    report = check_low_regret_low_variance(pair.row, _loss(estimate), rate)
    if not report.regret_bound_ok:
        logger.warning("Estimated-regret bound violated (min slack %.3e)", float(report.regret_bound_slack.min()))
    return float(report.regret_bound_slack.min()), float(report.variance_slack.min())
