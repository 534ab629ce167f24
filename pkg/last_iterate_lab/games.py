"""Duality gaps, action sampling and the catalog of test games."""

import csv
import logging
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from .models import (
    DimensionMismatchError,
    GameError,
    GameMatrix,
    MatrixParseError,
    Strategy,
    StrategyPair,
)

logger = logging.getLogger(__name__)

GAME_KINDS = (
    "uniform_random",
    "skew_symmetric_random",
    "psne_diagonal",
    "epsilon_example",
    "rock_paper_scissors",
    "matching_pennies",
    "from_file",
)

ROCK_PAPER_SCISSORS = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]]
MATCHING_PENNIES = [[1.0, -1.0], [-1.0, 1.0]]


def _payoff(game: GameMatrix | np.ndarray) -> np.ndarray:
    return game.entries if isinstance(game, GameMatrix) else np.asarray(game, dtype=float)


def duality_gap(game: GameMatrix | np.ndarray, pair: StrategyPair) -> float:
    """Duality gap ``max_j x^T A e_j - min_i e_i^T A y`` of a strategy pair.

    Args:
        game: True or estimated game (row player minimizes).
        pair: Strategy pair with matching dimensions.

    Returns:
        Nonnegative gap; zero exactly at a Nash equilibrium.
    """
    payoff = _payoff(game)
    pair.check_dims(payoff.shape)
    col_payoffs = pair.row.weights @ payoff
    row_payoffs = payoff @ pair.col.weights
    return max(0.0, float(col_payoffs.max() - row_payoffs.min()))


def instantaneous_regret(loss, x: Strategy) -> float:
    """Regret ``<x, loss> - min_i loss_i`` of a strategy against a fixed loss vector."""
    loss = np.asarray(loss, dtype=float).reshape(-1)
    if loss.size != len(x):
        raise DimensionMismatchError("loss vector", (len(x),), (loss.size,))
    return max(0.0, float(x.weights @ loss - loss.min()))


def _inverse_cdf(weights: np.ndarray, draws: np.ndarray) -> np.ndarray:
    cumulative = np.cumsum(weights)
    indices = np.searchsorted(cumulative, draws, side="right")
    # Rounding can leave cumulative[-1] a hair below 1.
    last = int(np.flatnonzero(weights > 0)[-1])
    return np.minimum(indices, last)


def sample_action(x: Strategy, rng: np.random.Generator) -> int:
    """Draw one action index (zero-based) from ``x`` by inverse CDF."""
    return int(_inverse_cdf(x.weights, np.array([rng.random()]))[0])


def sample_actions(x: Strategy, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized :func:`sample_action`: ``size`` independent draws."""
    return _inverse_cdf(x.weights, rng.random(size))


def _psne_diagonal(d: int, margin: float, rng: np.random.Generator) -> np.ndarray:
    if not 0.0 < margin < 1.0:
        raise GameError(f"psne_diagonal margin must lie in (0, 1), got {margin}")
    entries = rng.uniform(-1.0, 1.0, size=(d, d))
    entries[0, 0] = 0.0
    # Column 1 strictly above the corner, row 1 strictly below it.
    entries[1:, 0] = rng.uniform(margin, 1.0, size=d - 1)
    entries[0, 1:] = rng.uniform(-1.0, -margin, size=d - 1)
    if not _is_unique_pure_equilibrium(entries, 0, 0):
        raise GameError("psne_diagonal construction failed the brute-force equilibrium check")
    return entries


def _is_unique_pure_equilibrium(entries: np.ndarray, i: int, j: int) -> bool:
    value = entries[i, j]
    row_cannot_improve = all(entries[k, j] > value for k in range(entries.shape[0]) if k != i)
    col_cannot_improve = all(entries[i, k] < value for k in range(entries.shape[1]) if k != j)
    return row_cannot_improve and col_cannot_improve


def make_game(
    kind: str,
    d: int = 3,
    params: Mapping[str, float] | None = None,
    rng: np.random.Generator | None = None,
    path: str | Path | None = None,
) -> GameMatrix:
    """Build a game from the fixture catalog.

    Args:
        kind: One of :data:`GAME_KINDS`.
        d: Number of actions for the random generators.
        params: ``epsilon`` (epsilon_example), ``margin`` (psne_diagonal),
            ``rows``/``cols`` (uniform_random rectangular shapes).
        rng: Random stream for the random generators.
        path: CSV file for ``from_file``.

    Returns:
        The game matrix.
    """
    params = dict(params or {})
    rng = rng if rng is not None else np.random.default_rng(0)

    if kind == "uniform_random":
        rows = int(params.get("rows", d))
        cols = int(params.get("cols", d))
        entries = rng.uniform(-1.0, 1.0, size=(rows, cols))
    elif kind == "skew_symmetric_random":
        base = rng.uniform(-1.0, 1.0, size=(d, d))
        entries = (base - base.T) / 2.0
    elif kind == "psne_diagonal":
        entries = _psne_diagonal(d, float(params.get("margin", 0.1)), rng)
    elif kind == "epsilon_example":
        eps = float(params.get("epsilon", 0.1))
        if not 0.0 < eps < 1.0:
            raise GameError(f"epsilon_example needs epsilon in (0, 1), got {eps}")
        entries = [[0.0, -1.0, 0.0], [1.0, 0.0, -eps], [0.0, eps, 0.0]]
    elif kind == "rock_paper_scissors":
        entries = ROCK_PAPER_SCISSORS
    elif kind == "matching_pennies":
        entries = MATCHING_PENNIES
    elif kind == "from_file":
        if path is None:
            raise GameError("from_file needs a matrix path")
        return load_matrix_csv(path)
    else:
        raise GameError(f"unknown game kind {kind!r}; expected one of {', '.join(GAME_KINDS)}")

    entries = np.clip(np.asarray(entries, dtype=float), -1.0, 1.0)
    game = GameMatrix(entries)
    logger.debug("Built %s game (%s)", kind, game.describe())
    return game


def load_matrix_csv(path: str | Path) -> GameMatrix:
    """Load a game from a header-less CSV of reals, one matrix row per line.

    Entries outside [-1, 1] are rejected, never clipped.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise MatrixParseError(f"cannot read {path}: {e}", line=0) from e

    rows: list[list[float]] = []
    for line_no, cells in enumerate(csv.reader(text.splitlines()), 1):
        if not cells or all(not c.strip() for c in cells):
            continue
        row = []
        for col_no, cell in enumerate(cells, 1):
            try:
                value = float(cell)
            except ValueError:
                raise MatrixParseError(f"not a number: {cell.strip()!r}", line_no, col_no) from None
            if not np.isfinite(value) or abs(value) > 1.0:
                raise MatrixParseError(f"entry {value!r} is outside [-1, 1]", line_no, col_no)
            row.append(value)
        if rows and len(row) != len(rows[0]):
            raise MatrixParseError(f"expected {len(rows[0])} columns, found {len(row)}", line_no)
        rows.append(row)

    if not rows:
        raise MatrixParseError("file contains no matrix rows", line=1)
    return GameMatrix(np.array(rows))


def save_matrix_csv(game: GameMatrix, path: str | Path):
    """Write a game in the format :func:`load_matrix_csv` reads."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(repr(float(v)) for v in row) for row in game.entries]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
