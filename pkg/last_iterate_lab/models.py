"""Data models for last-iterate-lab."""

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

# Input sums may drift this far from 1 before construction rejects them;
# stored weights are renormalized to within STRATEGY_SUM_TOL.
STRATEGY_INPUT_TOL = 1e-6
STRATEGY_SUM_TOL = 1e-12

TRACE_COLUMNS = [
    "seed",
    "epoch",
    "t_start",
    "t_end",
    "gamma_or_alpha",
    "duality_gap",
    "solver_residual",
    "solver_iterations",
    "stability_row",
    "stability_col",
    "concentration_ok",
]


class GameError(ValueError):
    """Malformed game matrix or strategy."""


class DimensionMismatchError(GameError):
    """Shapes of two objects that must agree do not."""

    def __init__(self, what: str, expected: tuple, got: tuple):
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected shape {expected}, got {got}")


class EntryRangeError(GameError):
    """A matrix entry lies outside [-1, 1]."""

    def __init__(self, row: int, col: int, value: float):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"entry ({row + 1}, {col + 1}) = {value!r} is outside [-1, 1]")


class MatrixParseError(GameError):
    """A matrix file could not be parsed."""

    def __init__(self, message: str, line: int, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True, eq=False)
class GameMatrix:
    """A zero-sum matrix game; the row player pays ``entries[i, j]``."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise GameError(f"game matrix must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            i, j = np.argwhere(~np.isfinite(arr))[0]
            raise EntryRangeError(int(i), int(j), float(arr[i, j]))
        outside = np.abs(arr) > 1.0
        if outside.any():
            i, j = np.argwhere(outside)[0]
            raise EntryRangeError(int(i), int(j), float(arr[i, j]))
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def d(self) -> int:
        """Effective dimension used by every schedule: max(rows, cols)."""
        return max(self.rows, self.cols)

    @property
    def is_skew_symmetric(self) -> bool:
        return self.rows == self.cols and bool(np.array_equal(self.entries, -self.entries.T))

    def describe(self) -> str:
        kind = "skew-symmetric" if self.is_skew_symmetric else "general"
        return f"{self.rows}×{self.cols}, {kind}"


@dataclass(frozen=True, eq=False)
class Strategy:
    """A mixed strategy: nonnegative weights summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        arr = np.array(self.weights, dtype=float).reshape(-1)
        if arr.size < 1:
            raise GameError("strategy must have at least one action")
        if not np.all(np.isfinite(arr)) or (arr < 0).any():
            raise GameError(f"strategy weights must be finite and nonnegative: {arr}")
        total = arr.sum()
        if abs(total - 1.0) > STRATEGY_INPUT_TOL:
            raise GameError(f"strategy weights sum to {total!r}, not 1")
        arr = arr / total
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def is_interior(self) -> bool:
        return bool((self.weights > 0).all())

    @classmethod
    def uniform(cls, d: int) -> "Strategy":
        return cls(np.full(d, 1.0 / d))

    @classmethod
    def pure(cls, d: int, index: int) -> "Strategy":
        """Point mass on ``index`` (zero-based)."""
        weights = np.zeros(d)
        weights[index] = 1.0
        return cls(weights)


@dataclass(frozen=True, eq=False)
class StrategyPair:
    """Row player's and column player's strategies."""

    row: Strategy
    col: Strategy

    def check_dims(self, shape: tuple[int, int]):
        if (len(self.row), len(self.col)) != tuple(shape):
            raise DimensionMismatchError("strategy pair", tuple(shape), (len(self.row), len(self.col)))

    @property
    def is_interior(self) -> bool:
        return self.row.is_interior and self.col.is_interior

    @classmethod
    def uniform(cls, rows: int, cols: int) -> "StrategyPair":
        return cls(Strategy.uniform(rows), Strategy.uniform(cols))


@dataclass
class EpochRecord:
    """Everything recorded about one epoch of play."""

    seed: int
    epoch: int
    t_start: int
    t_end: int
    gamma_or_alpha: float
    duality_gap: float
    solver_residual: float
    solver_iterations: int
    stability_row: float
    stability_col: float
    concentration_ok: bool
    # Not part of the CSV; persisted in the strategies sidecar.
    row_strategy: list[float] = field(default_factory=list)
    col_strategy: list[float] = field(default_factory=list)
    concentration_slack: float | None = None
    saddle_slack: float | None = None
    variance_slack: float | None = None

    @property
    def length(self) -> int:
        return self.t_end - self.t_start + 1

    def to_row(self) -> list[str]:
        return [
            str(self.seed),
            str(self.epoch),
            str(self.t_start),
            str(self.t_end),
            repr(float(self.gamma_or_alpha)),
            repr(float(self.duality_gap)),
            repr(float(self.solver_residual)),
            str(self.solver_iterations),
            repr(float(self.stability_row)),
            repr(float(self.stability_col)),
            "true" if self.concentration_ok else "false",
        ]

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "EpochRecord":
        return cls(
            seed=int(row["seed"]),
            epoch=int(row["epoch"]),
            t_start=int(row["t_start"]),
            t_end=int(row["t_end"]),
            gamma_or_alpha=float(row["gamma_or_alpha"]),
            duality_gap=float(row["duality_gap"]),
            solver_residual=float(row["solver_residual"]),
            solver_iterations=int(row["solver_iterations"]),
            stability_row=float(row["stability_row"]),
            stability_col=float(row["stability_col"]),
            concentration_ok=row["concentration_ok"].strip().lower() == "true",
        )


@dataclass
class RunTrace:
    """Per-epoch records of one (algorithm, seed) run, appended in epoch order."""

    algorithm: str
    seed: int
    rows: int
    cols: int
    diagnostics: bool = False
    records: list[EpochRecord] = field(default_factory=list)

    def append(self, record: EpochRecord):
        if self.records:
            last = self.records[-1]
            if record.epoch != last.epoch + 1 or record.t_start != last.t_end + 1:
                raise ValueError(
                    f"epoch {record.epoch} (rounds {record.t_start}-{record.t_end}) "
                    f"does not follow epoch {last.epoch} (ending at {last.t_end})"
                )
        if record.duality_gap < 0:
            raise ValueError(f"negative duality gap {record.duality_gap!r} at epoch {record.epoch}")
        self.records.append(record)

    @property
    def total_rounds(self) -> int:
        return self.records[-1].t_end if self.records else 0

    def gap_at_round(self, t: int) -> float:
        """Duality gap of the pair played in round ``t`` (piecewise constant per epoch)."""
        for record in self.records:
            if record.t_start <= t <= record.t_end:
                return record.duality_gap
        raise IndexError(f"round {t} is outside the trace (1..{self.total_rounds})")

    def per_round_gaps(self) -> np.ndarray:
        return np.concatenate([np.full(r.length, r.duality_gap) for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for record in self.records:
            writer.writerow(record.to_row())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, algorithm: str, rows: int = 0, cols: int = 0) -> "RunTrace":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace columns: {reader.fieldnames}")
        records = [EpochRecord.from_row(row) for row in reader]
        seed = records[0].seed if records else 0
        trace = cls(algorithm=algorithm, seed=seed, rows=rows, cols=cols)
        for record in records:
            trace.append(record)
        return trace

    def strategies_json(self, indent: int = 2) -> str:
        """Serialize the parts of the trace the CSV does not carry."""
        data = {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "rows": self.rows,
            "cols": self.cols,
            "diagnostics": self.diagnostics,
            "epochs": [
                {
                    "epoch": r.epoch,
                    "row": r.row_strategy,
                    "col": r.col_strategy,
                    "concentration_slack": r.concentration_slack,
                    "saddle_slack": r.saddle_slack,
                    "variance_slack": r.variance_slack,
                }
                for r in self.records
            ],
        }
        return json.dumps(data, indent=indent)

    def attach_strategies(self, data: str | dict):
        """Merge a strategies sidecar produced by :meth:`strategies_json`."""
        if isinstance(data, str):
            data = json.loads(data)
        self.rows = data.get("rows", self.rows)
        self.cols = data.get("cols", self.cols)
        self.diagnostics = bool(data.get("diagnostics", False))
        by_epoch = {item["epoch"]: item for item in data.get("epochs", [])}
        for record in self.records:
            item = by_epoch.get(record.epoch)
            if item is None:
                logger.warning("No strategies stored for epoch %d of %s seed %d", record.epoch, self.algorithm, self.seed)
                continue
            record.row_strategy = list(item["row"])
            record.col_strategy = list(item["col"])
            record.concentration_slack = item.get("concentration_slack")
            record.saddle_slack = item.get("saddle_slack")
            record.variance_slack = item.get("variance_slack")

