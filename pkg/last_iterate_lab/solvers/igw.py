"""Inverse-gap-weighting solve of the log-barrier-regularized linear problem on a simplex."""

import logging

import numpy as np
from scipy.optimize import brentq

from ..models import Strategy

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
NEWTON_POLISH_STEPS = 2
MAX_BRACKET_ITERATIONS = 500


class SolverError(RuntimeError):
    """A solver hit its iteration cap; carries the last residual and, when known, the last iterate."""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0, pair=None):
        self.residual = residual
        self.iterations = iterations
        self.pair = pair
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")


def igw_weights(loss, gamma: float, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """Minimize ``<x, loss> + gamma * sum(log(1/x_i))`` over the simplex.

    The minimizer is ``x_i = gamma / (loss_i + lam)`` with ``lam > -min(loss)``
    chosen so the weights sum to one. Writing ``lam = gamma * kappa - min(loss)``
    puts the root in ``kappa in [1, d]`` and avoids cancellation for small gamma.

    Args:
        loss: Loss estimate vector.
        gamma: Barrier weight, > 0.
        tol: Tolerance on the sum and on the multiplier identity.

    Returns:
        Weights (summing to one) and the multiplier ``lam``.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    loss = np.asarray(loss, dtype=float).reshape(-1)
    if not np.all(np.isfinite(loss)):
        raise ValueError(f"loss estimate must be finite: {loss}")

    d = loss.size
    floor = float(loss.min())
    if d == 1:
        return np.ones(1), gamma - floor

    gaps = (loss - floor) / gamma

    def excess(kappa: float) -> float:
        return float(np.sum(1.0 / (gaps + kappa)) - 1.0)

    try:
        kappa = brentq(excess, 1.0, float(d), xtol=1e-15, rtol=4 * np.finfo(float).eps,
                       maxiter=MAX_BRACKET_ITERATIONS)
    except (RuntimeError, ValueError) as e:
        logger.error("IGW root bracketing failed for gamma=%.3e: %s", gamma, e)
        raise SolverError("inverse-gap-weighting root find did not converge") from e

    for _ in range(NEWTON_POLISH_STEPS):
        terms = 1.0 / (gaps + kappa)
        slope = -float(np.sum(terms * terms))
        candidate = kappa - (float(terms.sum()) - 1.0) / slope
        if not 1.0 <= candidate <= d:
            break
        kappa = candidate

    raw = 1.0 / (gaps + kappa)
    total = float(raw.sum())
    weights = raw / total
    multiplier_error = float(np.max(np.abs(weights * (gaps + kappa) - 1.0)))
    if abs(total - 1.0) > tol or multiplier_error > tol:
        logger.error("IGW solve missed tolerance: sum=%.17g, multiplier error=%.3e", total, multiplier_error)
        raise SolverError("inverse-gap-weighting solve missed tolerance", residual=max(abs(total - 1.0), multiplier_error))
    return weights, gamma * kappa - floor


def solve_igw(loss_estimate, gamma: float, tol: float = DEFAULT_TOL) -> Strategy:
    """Inverse-gap-weighting strategy ``argmin_x <x, loss> + gamma * sum(log(1/x_i))``."""
    weights, _ = igw_weights(loss_estimate, gamma, tol)
    return Strategy(weights)
