"""Unregularized zero-sum matrix games solved along a log-barrier regularization path."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from ..games import duality_gap
from ..models import Strategy, StrategyPair
from .igw import SolverError
from .saddle import RegularizedGame, solve_logbarrier_saddle

logger = logging.getLogger(__name__)

MAX_PATH_STEPS = 60
# Inner residual per stage, relative to max(tol, gamma).
PATH_INNER_RATIO = 1e-2
PATH_MAX_ITERATIONS = 200
MAX_STALLED_STAGES = 2


@dataclass(frozen=True, eq=False)
class MatrixGameSolution:
    pair: StrategyPair
    value: float
    gap: float
    gamma: float
    iterations: int
    method: str = "path"


def _solution(payoff: np.ndarray, pair: StrategyPair, gap: float, gamma: float,
              iterations: int, method: str) -> MatrixGameSolution:
    value = float(pair.row.weights @ payoff @ pair.col.weights)
    return MatrixGameSolution(pair, value, gap, gamma, iterations, method)


def matrix_game_path(payoff, tol: float = 1e-6, max_steps: int = MAX_PATH_STEPS) -> MatrixGameSolution:
    """Follow gamma_k = 2^-k, warm-starting each saddle solve from the last,
    until the unregularized duality gap drops to ``tol``.

    Each stage is solved to residual ``max(tol, gamma) * PATH_INNER_RATIO``. A
    stage that hits its iteration cap hands its last iterate on; the path gives
    up after ``MAX_STALLED_STAGES`` such stages unless that iterate already
    meets ``tol``. The limit selects the analytic center of the equilibrium set.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    payoff = np.asarray(payoff, dtype=float)
    pair: StrategyPair | None = None
    total_iterations = 0
    best_gap = float("inf")
    stalled = 0
    for k in range(max_steps + 1):
        gamma = 2.0 ** (-k)
        inner_tol = max(tol, gamma) * PATH_INNER_RATIO
        try:
            solution = solve_logbarrier_saddle(
                RegularizedGame(payoff, gamma), tol=inner_tol, init=pair, max_iterations=PATH_MAX_ITERATIONS,
            )
            candidate, iterations = solution.pair, solution.iterations
        except SolverError as e:
            logger.debug("Path stage gamma=2^-%d stalled: %s", k, e)
            candidate, iterations = e.pair, e.iterations
            stalled += 1
        total_iterations += iterations

        if candidate is not None:
            pair = candidate
            gap = duality_gap(payoff, pair)
            best_gap = min(best_gap, gap)
            if gap <= tol:
                logger.debug("Matrix game solved at gamma=2^-%d: gap=%.3e", k, gap)
                return _solution(payoff, pair, gap, gamma, total_iterations, "path")
        if stalled >= MAX_STALLED_STAGES:
            break

    logger.warning("Regularization path ended with gap %.3e > %.3e", best_gap, tol)
    raise SolverError("regularization path did not reach the requested duality gap",
                      residual=best_gap, iterations=total_iterations, pair=pair)


def _simplex_lp(payoff: np.ndarray) -> tuple[np.ndarray, bool, str]:
    """Minimize v subject to ``payoff^T x <= v`` on the simplex; returns x."""
    rows, cols = payoff.shape
    result = linprog(
        c=np.r_[np.zeros(rows), 1.0],
        A_ub=np.c_[payoff.T, -np.ones(cols)],
        b_ub=np.zeros(cols),
        A_eq=np.r_[np.ones(rows), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(0.0, None)] * rows + [(None, None)],
        method="highs",
    )
    if not result.success:
        return np.full(rows, 1.0 / rows), False, result.message
    x = np.clip(result.x[:rows], 0.0, None)
    return x / x.sum(), True, ""


def minimax_lp(payoff, tol: float = 1e-6) -> MatrixGameSolution:
    """Minimax pair from the two linear programs of the game, solved with HiGHS."""
    payoff = np.asarray(payoff, dtype=float)
    x, row_ok, row_msg = _simplex_lp(payoff)
    # The column player's program is the row program of -payoff^T.
    y, col_ok, col_msg = _simplex_lp(-payoff.T)
    if not (row_ok and col_ok):
        logger.error("Minimax linear program failed: %s", row_msg or col_msg)
        raise SolverError(f"minimax linear program failed: {row_msg or col_msg}")
    pair = StrategyPair(Strategy(x), Strategy(y))
    gap = duality_gap(payoff, pair)
    if gap > tol:
        logger.error("Minimax linear program reached gap %.3e > %.3e", gap, tol)
        raise SolverError("minimax linear program missed the requested duality gap", residual=gap, pair=pair)
    return _solution(payoff, pair, gap, 0.0, 0, "linprog")


def find_equilibrium(payoff, tol: float = 1e-6) -> MatrixGameSolution:
    """Regularization path first; games it cannot certify go to :func:`minimax_lp`."""
    try:
        return matrix_game_path(payoff, tol)
    except SolverError as e:
        logger.info("Falling back to the minimax linear program: %s", e)
        return minimax_lp(payoff, tol)


def solve_matrix_game(payoff, tol: float = 1e-6) -> tuple[StrategyPair, float]:
    """Minimax pair and value of ``min_x max_y x^T A y`` to duality gap ``tol``."""
    solution = find_equilibrium(payoff, tol)
    return solution.pair, solution.value
