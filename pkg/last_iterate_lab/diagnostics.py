"""Runtime checks of the first-order inequalities satisfied by barrier-regularized strategies.

Single player: for x = argmin <x, l> + gamma * sum(log(1/x_i)),

    <x, l> - l_i <= d*gamma - gamma/x_i              (estimated-regret bound)

which implies  Reg(x) <= d*gamma  and  1/x_i <= d + Reg(e_i)/gamma.

Two players: at the regularized saddle point, for every (i, j),

    x^T M e_j - e_i^T M y <= 2*d*gamma - gamma/x_i - gamma/y_j
    1/x_i + 1/y_j <= 2*d + DGap(e_i, e_j)/gamma
"""

import logging
from dataclasses import dataclass

import numpy as np

from .environment import EstimatedGame
from .models import DimensionMismatchError, Strategy, StrategyPair

logger = logging.getLogger(__name__)

DEFAULT_SLACK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RegretEstimates:
    """Per-action estimated regret and, when the true loss is known, true regret."""

    estimated_regret: np.ndarray
    true_regret: np.ndarray | None = None


def regret_estimates(loss_estimate, true_loss=None) -> RegretEstimates:
    loss_estimate = np.asarray(loss_estimate, dtype=float)
    true = None
    if true_loss is not None:
        true_loss = np.asarray(true_loss, dtype=float)
        true = true_loss - true_loss.min()
    return RegretEstimates(loss_estimate - loss_estimate.min(), true)


@dataclass(frozen=True, eq=False)
class LowVarianceReport:
    """Slacks (bound minus value) of the single-player inequalities; >= 0 means satisfied."""

    estimated_regret: float
    regret_slack: float
    variance_slack: np.ndarray
    regret_bound_slack: np.ndarray
    regret_ok: bool
    variance_ok: bool
    regret_bound_ok: bool
    implication_ok: bool

    @property
    def holds(self) -> bool:
        return self.regret_ok and self.variance_ok and self.regret_bound_ok


def check_low_regret_low_variance(
    x: Strategy, loss_estimate, gamma: float, slack_tol: float = DEFAULT_SLACK_TOL
) -> LowVarianceReport:
    """Check low regret, low variance and the stronger estimated-regret bound.

    ``implication_ok`` records that whenever the estimated-regret bound holds
    for every action, the two weaker inequalities hold as well.
    """
    loss = np.asarray(loss_estimate, dtype=float).reshape(-1)
    if loss.size != len(x):
        raise DimensionMismatchError("loss estimate", (len(x),), (loss.size,))
    w = x.weights
    d = loss.size
    estimates = regret_estimates(loss)
    inner = float(w @ loss)
    est_regret = inner - float(loss.min())

    regret_slack = d * gamma - est_regret
    variance_slack = d + estimates.estimated_regret / gamma - 1.0 / w
    bound_slack = d * gamma - gamma / w - (inner - loss)

    regret_ok = regret_slack >= -slack_tol
    # Dividing by gamma rescales the tolerance.
    variance_ok = bool((variance_slack >= -slack_tol * max(1.0, 1.0 / gamma)).all())
    bound_ok = bool((bound_slack >= -slack_tol).all())
    implication_ok = (not bound_ok) or (regret_ok and variance_ok)
    if not implication_ok:
        logger.warning("Estimated-regret bound held but a weaker inequality failed (gamma=%.3e)", gamma)
    return LowVarianceReport(
        estimated_regret=est_regret,
        regret_slack=regret_slack,
        variance_slack=variance_slack,
        regret_bound_slack=bound_slack,
        regret_ok=bool(regret_ok),
        variance_ok=variance_ok,
        regret_bound_ok=bound_ok,
        implication_ok=bool(implication_ok),
    )


def _payoff(estimate: EstimatedGame | np.ndarray) -> np.ndarray:
    return estimate.entries if isinstance(estimate, EstimatedGame) else np.asarray(estimate, dtype=float)


@dataclass(frozen=True, eq=False)
class GameLowVarianceReport:
    """Low-duality-gap-low-variance check; diagnostic only.

    The estimated gap of a pure pair cannot be tied to the true duality gap,
    so this inequality does not by itself yield a convergence rate.
    """

    estimated_gaps: np.ndarray
    slack: np.ndarray
    worst_cell: tuple[int, int]
    holds: bool
    note: str = "diagnostic only: bounds variance by the estimated gap, not the true one"

    @property
    def worst_slack(self) -> float:
        return float(self.slack[self.worst_cell])


def check_game_low_variance(
    pair: StrategyPair, estimate: EstimatedGame | np.ndarray, gamma: float, slack_tol: float = DEFAULT_SLACK_TOL
) -> GameLowVarianceReport:
    """Check ``1/x_i + 1/y_j <= 2d + DGap_hat(e_i, e_j)/gamma`` for all (i, j)."""
    payoff = _payoff(estimate)
    pair.check_dims(payoff.shape)
    d = max(payoff.shape)
    # DGap_hat(e_i, e_j) = max_k M[i, k] - min_k M[k, j]
    pure_gaps = payoff.max(axis=1)[:, None] - payoff.min(axis=0)[None, :]
    inv = 1.0 / pair.row.weights[:, None] + 1.0 / pair.col.weights[None, :]
    slack = 2 * d + pure_gaps / gamma - inv
    cell = np.unravel_index(int(np.argmin(slack)), slack.shape)
    holds = bool((slack >= -slack_tol * max(1.0, 1.0 / gamma)).all())
    return GameLowVarianceReport(pure_gaps, slack, (int(cell[0]), int(cell[1])), holds)


@dataclass(frozen=True, eq=False)
class SaddleInequalityReport:
    slack: np.ndarray
    worst_cell: tuple[int, int]
    holds: bool

    @property
    def worst_slack(self) -> float:
        return float(self.slack[self.worst_cell])


def check_saddle_inequality(
    pair: StrategyPair, estimate: EstimatedGame | np.ndarray, gamma: float, slack_tol: float = DEFAULT_SLACK_TOL
) -> SaddleInequalityReport:
    """Check ``x^T M e_j - e_i^T M y <= 2 d gamma - gamma/x_i - gamma/y_j`` for all (i, j)."""
    payoff = _payoff(estimate)
    pair.check_dims(payoff.shape)
    x, y = pair.row.weights, pair.col.weights
    d = max(payoff.shape)
    lhs = (x @ payoff)[None, :] - (payoff @ y)[:, None]
    rhs = 2 * d * gamma - gamma / x[:, None] - gamma / y[None, :]
    slack = rhs - lhs
    cell = np.unravel_index(int(np.argmin(slack)), slack.shape)
    return SaddleInequalityReport(slack, (int(cell[0]), int(cell[1])), bool((slack >= -slack_tol).all()))
