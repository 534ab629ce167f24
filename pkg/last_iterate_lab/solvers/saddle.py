"""Saddle point of the log-barrier-regularized bilinear game.

Phi(x, y) = x^T M y + gamma * sum(log(1/x_i)) - gamma * sum(log(1/y_j)),
minimized over x and maximized over y, both on simplices.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..environment import EstimatedGame
from ..models import Strategy, StrategyPair
from .igw import DEFAULT_TOL, SolverError, igw_weights

logger = logging.getLogger(__name__)

MAX_OUTER_ITERATIONS = 10_000
MIN_DAMPING = 1.0 / 1024
NEWTON_STEP_SIZES = (1.0, 0.5, 0.25)
MAX_LOG_STEP = 50.0
RESIDUAL_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class RegularizedGame:
    """Estimated game plus barrier weight gamma."""

    estimate: EstimatedGame | np.ndarray
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def payoff(self) -> np.ndarray:
        if isinstance(self.estimate, EstimatedGame):
            return self.estimate.entries
        return np.asarray(self.estimate, dtype=float)


@dataclass(frozen=True, eq=False)
class SaddleSolution:
    pair: StrategyPair
    kkt_residual: float
    iterations: int
    row_multiplier: float
    col_multiplier: float


@dataclass
class _Point:
    """Iterate with its fitted best responses and relative residual."""

    x: np.ndarray
    y: np.ndarray
    best_x: np.ndarray
    best_y: np.ndarray
    nu_x: float
    nu_y: float
    residual: float


def _evaluate(payoff: np.ndarray, gamma: float, x: np.ndarray, y: np.ndarray) -> _Point:
    # Fitted multipliers are those of the exact partial solves at the opponent's
    # current strategy, so the residual is max |x_i / BR_x(y)_i - 1| over both players.
    best_x, lam_x = igw_weights(payoff @ y, gamma)
    best_y, lam_y = igw_weights(-(payoff.T @ x), gamma)
    residual = max(float(np.max(np.abs(x / best_x - 1.0))), float(np.max(np.abs(y / best_y - 1.0))))
    return _Point(x, y, best_x, best_y, -lam_x, lam_y, residual)


def _project(weights: np.ndarray, floor: float) -> np.ndarray:
    weights = np.maximum(weights, floor)
    return weights / weights.sum()


def _damped_step(payoff: np.ndarray, gamma: float, point: _Point, eta: float, floor: float) -> _Point:
    x = _project((1.0 - eta) * point.x + eta * point.best_x, floor)
    best_y, _ = igw_weights(-(payoff.T @ x), gamma)
    y = _project((1.0 - eta) * point.y + eta * best_y, floor)
    return _evaluate(payoff, gamma, x, y)


def _newton_step(payoff: np.ndarray, gamma: float, point: _Point, floor: float) -> _Point | None:
    """Newton step on the first-order system in log-coordinates; None if no improvement."""
    x, y = point.x, point.y
    d1, d2 = x.size, y.size
    n = d1 + d2 + 2
    jac = np.zeros((n, n))
    rhs = np.zeros(n)

    # Row conditions x_i (g_i - nu_x) = gamma, scaled by 1/gamma.
    jac[:d1, :d1] = np.diag(x / point.best_x)
    jac[:d1, d1:d1 + d2] = x[:, None] * payoff * y[None, :] / gamma
    jac[:d1, d1 + d2] = -x
    rhs[:d1] = 1.0 - x / point.best_x
    # Column conditions y_j (nu_y - h_j) = gamma.
    jac[d1:d1 + d2, :d1] = -(y[:, None] * payoff.T * x[None, :]) / gamma
    jac[d1:d1 + d2, d1:d1 + d2] = np.diag(y / point.best_y)
    jac[d1:d1 + d2, d1 + d2 + 1] = y
    rhs[d1:d1 + d2] = 1.0 - y / point.best_y
    # Simplex constraints.
    jac[d1 + d2, :d1] = x
    jac[d1 + d2 + 1, d1:d1 + d2] = y

    try:
        step = np.linalg.solve(jac, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(step)):
        return None

    u, w = step[:d1], step[d1:d1 + d2]
    for size in NEWTON_STEP_SIZES:
        x_new = _project(x * np.exp(np.clip(size * u, -MAX_LOG_STEP, MAX_LOG_STEP)), floor)
        y_new = _project(y * np.exp(np.clip(size * w, -MAX_LOG_STEP, MAX_LOG_STEP)), floor)
        candidate = _evaluate(payoff, gamma, x_new, y_new)
        if candidate.residual < point.residual:
            return candidate
    return None


def solve_logbarrier_saddle(
    game: RegularizedGame,
    tol: float = DEFAULT_TOL,
    init: StrategyPair | None = None,
    max_iterations: int = MAX_OUTER_ITERATIONS,
) -> SaddleSolution:
    """Unique saddle point of the regularized game by damped alternating partial solves.

    Each outer iteration solves for x exactly against the current y (an IGW
    solve on ``M y``), then for y against the new x, and moves a fraction eta
    toward them. Eta starts at 1 and halves whenever the damped move would raise
    the residual. A Newton step on the first-order system is tried alongside and
    kept only when it lowers the residual further.

    Args:
        game: Estimated game and barrier weight.
        tol: Target relative residual of the first-order conditions.
        init: Optional warm start.
        max_iterations: Outer iteration cap.

    Returns:
        The saddle pair with its residual and iteration count.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    payoff = game.payoff
    gamma = float(game.gamma)
    d1, d2 = payoff.shape
    # Every coordinate of the solution is >= gamma / (2 + gamma * d).
    floor = 0.5 * gamma / (2.0 + gamma * max(d1, d2))

    if init is None:
        x, y = np.full(d1, 1.0 / d1), np.full(d2, 1.0 / d2)
    else:
        init.check_dims(payoff.shape)
        x, y = _project(init.row.weights, floor), _project(init.col.weights, floor)

    point = _evaluate(payoff, gamma, x, y)
    # Errors in gamma/x_i scale with the residual times (2 + gamma*d), so aim
    # below tol by that factor; the floating-point floor caps how far.
    target = min(tol, max(tol / (4.0 * (1.0 + gamma * max(d1, d2))), RESIDUAL_FLOOR))
    eta = 1.0
    iterations = 0
    while point.residual > target:
        if iterations >= max_iterations:
            if point.residual <= tol:
                break
            logger.error("Saddle solve stalled at residual %.3e after %d iterations (gamma=%.3e)",
                         point.residual, iterations, gamma)
            raise SolverError("log-barrier saddle solve exceeded its iteration cap",
                              residual=point.residual, iterations=iterations,
                              pair=StrategyPair(Strategy(point.x), Strategy(point.y)))
        iterations += 1

        damped = _damped_step(payoff, gamma, point, eta, floor)
        newton = _newton_step(payoff, gamma, point, floor)
        best = newton if newton is not None and newton.residual < damped.residual else damped
        if best.residual < point.residual:
            point = best
        elif point.residual <= tol:
            break
        elif eta > MIN_DAMPING:
            eta /= 2.0
        else:
            point = damped

    logger.debug("Saddle solve: gamma=%.3e residual=%.3e iterations=%d", gamma, point.residual, iterations)
    pair = StrategyPair(Strategy(point.x), Strategy(point.y))
    return SaddleSolution(
        pair=pair,
        kkt_residual=point.residual,
        iterations=iterations,
        row_multiplier=point.nu_x,
        col_multiplier=point.nu_y,
    )
