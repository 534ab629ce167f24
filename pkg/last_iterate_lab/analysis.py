"""Post-hoc analysis of run traces: log-log slope fits, multi-seed aggregation and per-epoch stability/concentration reports."""

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from .environment import beta_schedule
from .games import duality_gap
from .models import GameMatrix, RunTrace, Strategy, StrategyPair

logger = logging.getLogger(__name__)

DEFAULT_T_MIN = 1000
AGGREGATORS = ("arithmetic", "geometric")
STABILITY_FACTOR = 16


class FitError(ValueError):
    """Too few usable points for a slope fit."""


class DiagnosticsMissingError(ValueError):
    """A report needs data the trace was recorded without."""


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    t_min: int
    n_points: int
    r_squared: float
    excluded: int = 0


@dataclass
class AggregateTrace:
    """Epoch-level statistics of one algorithm's duality gap across seeds."""

    algorithm: str
    epochs: list[int]
    t_start: list[int]
    t_end: list[int]
    mean: np.ndarray
    min: np.ndarray
    max: np.ndarray
    seeds: list[int] = field(default_factory=list)
    per_seed: np.ndarray | None = None
    aggregator: str = "arithmetic"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["epoch", "t_start", "t_end", "mean_gap", "min_gap", "max_gap"]
                        + [f"seed_{s}" for s in self.seeds])
        for k, epoch in enumerate(self.epochs):
            per_seed = [] if self.per_seed is None else [repr(float(v)) for v in self.per_seed[:, k]]
            writer.writerow([
                epoch, self.t_start[k], self.t_end[k],
                repr(float(self.mean[k])), repr(float(self.min[k])), repr(float(self.max[k])),
                *per_seed,
            ])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, algorithm: str, aggregator: str = "arithmetic") -> "AggregateTrace":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or header[:6] != ["epoch", "t_start", "t_end", "mean_gap", "min_gap", "max_gap"]:
            raise ValueError(f"unexpected aggregate columns: {header}")
        seeds = [int(name.removeprefix("seed_")) for name in header[6:]]
        rows = [row for row in reader if row]
        per_seed = None
        if seeds:
            per_seed = np.array([[float(v) for v in row[6:]] for row in rows]).T.reshape(len(seeds), len(rows))
        return cls(
            algorithm=algorithm,
            epochs=[int(r[0]) for r in rows],
            t_start=[int(r[1]) for r in rows],
            t_end=[int(r[2]) for r in rows],
            mean=np.array([float(r[3]) for r in rows]),
            min=np.array([float(r[4]) for r in rows]),
            max=np.array([float(r[5]) for r in rows]),
            seeds=seeds,
            per_seed=per_seed,
            aggregator=aggregator,
        )


def aggregate(traces: list[RunTrace], aggregator: str = "arithmetic") -> AggregateTrace:
    """Pointwise mean, min and max of the duality gap at every epoch.

    Args:
        traces: Runs of one algorithm that differ only in seed.
        aggregator: ``arithmetic`` mean or ``geometric`` mean across seeds.

    Returns:
        The aggregate, with per-seed columns in input order.
    """
    if not traces:
        raise ValueError("aggregate needs at least one trace")
    if aggregator not in AGGREGATORS:
        raise ValueError(f"unknown aggregator {aggregator!r}; expected one of {', '.join(AGGREGATORS)}")
    first = traces[0]
    spans = [(r.epoch, r.t_start, r.t_end) for r in first.records]
    for trace in traces[1:]:
        if trace.algorithm != first.algorithm or (trace.rows, trace.cols) != (first.rows, first.cols):
            raise ValueError(
                f"cannot aggregate {trace.algorithm} {trace.rows}x{trace.cols} "
                f"with {first.algorithm} {first.rows}x{first.cols}"
            )
        if [(r.epoch, r.t_start, r.t_end) for r in trace.records] != spans:
            raise ValueError(f"seed {trace.seed} covers different epochs than seed {first.seed}")

    gaps = np.array([[r.duality_gap for r in trace.records] for trace in traces])
    low, high = gaps.min(axis=0), gaps.max(axis=0)
    if aggregator == "geometric":
        with np.errstate(divide="ignore"):
            mean = np.exp(np.log(gaps).mean(axis=0))
    else:
        mean = gaps.mean(axis=0)
    # Rounding in the mean can step just outside the order statistics.
    mean = np.clip(mean, low, high)
    return AggregateTrace(
        algorithm=first.algorithm,
        epochs=[s for s, _, _ in spans],
        t_start=[a for _, a, _ in spans],
        t_end=[b for _, _, b in spans],
        mean=mean,
        min=low,
        max=high,
        seeds=[t.seed for t in traces],
        per_seed=gaps,
        aggregator=aggregator,
    )


def epoch_points(trace: AggregateTrace | RunTrace, t_min: int = DEFAULT_T_MIN) -> tuple[np.ndarray, np.ndarray, int]:
    """One (round, gap) point per epoch ending at or after ``t_min``.

    The round is the midpoint of the part of the epoch at or after ``t_min``.
    Nonpositive gaps are dropped; the number dropped is returned third.
    """
    if isinstance(trace, RunTrace):
        spans = [(r.t_start, r.t_end, r.duality_gap) for r in trace.records]
    else:
        spans = list(zip(trace.t_start, trace.t_end, trace.mean.tolist()))

    ts, gaps, excluded = [], [], 0
    for t_start, t_end, gap in spans:
        if t_end < t_min:
            continue
        if not gap > 0:
            excluded += 1
            continue
        ts.append((max(t_start, t_min) + t_end) / 2.0)
        gaps.append(gap)
    return np.array(ts), np.array(gaps), excluded


def fit_power_law(ts, gaps) -> tuple[float, float, float]:
    """Least-squares line through ``(log t, log gap)``: slope, intercept, r squared."""
    result = linregress(np.log(np.asarray(ts, dtype=float)), np.log(np.asarray(gaps, dtype=float)))
    r_squared = min(1.0, max(0.0, float(result.rvalue) ** 2))
    return float(result.slope), float(result.intercept), r_squared


def fit_slope(trace: AggregateTrace | RunTrace, t_min: int = DEFAULT_T_MIN) -> SlopeFit:
    """Fit ``gap ~ C t^slope`` on epoch representative points.

    Args:
        trace: A single run or an aggregate (its mean is fitted).
        t_min: First round that counts.

    Returns:
        The fit, with the number of nonpositive gaps left out.

    Raises:
        FitError: Fewer than two usable epochs.
    """
    ts, gaps, excluded = epoch_points(trace, t_min)
    if excluded:
        logger.info("Slope fit: excluded %d epoch(s) with nonpositive gap", excluded)
    if len(ts) < 2:
        raise FitError(f"need at least 2 epochs ending at or after t={t_min} with positive gap, got {len(ts)}")
    slope, intercept, r_squared = fit_power_law(ts, gaps)
    return SlopeFit(slope, intercept, t_min, len(ts), r_squared, excluded)


@dataclass(frozen=True)
class EpochLemmaStatus:
    epoch: int
    stability_ratio: float
    stability_ok: bool
    concentration_ok: bool
    beta: float | None
    concentration_slack: float | None
    saddle_slack: float | None


@dataclass
class LemmaReport:
    algorithm: str
    seed: int
    d: int
    stability_bound: float
    epochs: list[EpochLemmaStatus]

    @property
    def all_stability_held(self) -> bool:
        return all(e.stability_ok for e in self.epochs)

    @property
    def all_concentration_held(self) -> bool:
        return all(e.concentration_ok for e in self.epochs)

    @property
    def worst_saddle_slack(self) -> float | None:
        slacks = [e.saddle_slack for e in self.epochs if e.saddle_slack is not None]
        return min(slacks) if slacks else None

    @property
    def violations(self) -> list[int]:
        return [e.epoch for e in self.epochs if not (e.stability_ok and e.concentration_ok)]

    def summary_line(self) -> str:
        return f"all-epoch stability held: {'yes' if self.all_stability_held else 'no'}"


def _stability_ratio(trace: RunTrace, k: int) -> float:
    record = trace.records[k]
    if k > 0:
        prev = trace.records[k - 1]
        if record.row_strategy and prev.row_strategy and record.col_strategy and prev.col_strategy:
            x, x_prev = np.asarray(record.row_strategy), np.asarray(prev.row_strategy)
            y, y_prev = np.asarray(record.col_strategy), np.asarray(prev.col_strategy)
            return float(max(np.max(x / x_prev), np.max(y / y_prev)))
    return max(record.stability_row, record.stability_col)


def lemma_report(trace: RunTrace, d: int | None = None, delta: float = 0.1) -> LemmaReport:
    """Per-epoch multiplicative stability, concentration and saddle-inequality status.

    Stability ratios are recomputed from stored strategies when the trace has
    them and read from the CSV columns otherwise.
    """
    if not trace.diagnostics:
        raise DiagnosticsMissingError(
            f"trace for {trace.algorithm} seed {trace.seed} was recorded without diagnostics"
        )
    d = d or max(trace.rows, trace.cols)
    if d < 1:
        raise ValueError("lemma_report needs the game dimension")
    bound = float(STABILITY_FACTOR * d)

    epochs = []
    for k, record in enumerate(trace.records):
        ratio = _stability_ratio(trace, k)
        beta = None
        if record.epoch >= 2:
            beta = beta_schedule(record.epoch, d, delta, single_player=trace.algorithm == "falcon")
        epochs.append(EpochLemmaStatus(
            epoch=record.epoch,
            stability_ratio=ratio,
            stability_ok=ratio <= bound,
            concentration_ok=record.concentration_ok,
            beta=beta,
            concentration_slack=record.concentration_slack,
            saddle_slack=record.saddle_slack,
        ))
    report = LemmaReport(trace.algorithm, trace.seed, d, bound, epochs)
    if report.violations:
        logger.info("%s seed %d: stability or concentration checks failed in epochs %s", trace.algorithm, trace.seed, report.violations)
    return report


@dataclass
class ConvergenceProfile:
    """Per-epoch duality gaps under four notions of convergence."""

    epochs: list[int]
    last_iterate: np.ndarray
    best_iterate: np.ndarray
    random_iterate: np.ndarray
    average_iterate: np.ndarray

    def final(self) -> dict[str, float]:
        return {
            "last_iterate": float(self.last_iterate[-1]),
            "best_iterate": float(self.best_iterate[-1]),
            "random_iterate": float(self.random_iterate[-1]),
            "average_iterate": float(self.average_iterate[-1]),
        }


def convergence_profile(trace: RunTrace, game: GameMatrix) -> ConvergenceProfile:
    """Last-, best-, random- and average-iterate gaps after each epoch.

    The random iterate is a round drawn uniformly from those played so far, so
    its gap is the round-weighted mean of per-round gaps. The average iterate
    is the round-weighted average strategy pair.
    """
    if not trace.records:
        raise ValueError("empty trace")
    if any(not r.row_strategy or not r.col_strategy for r in trace.records):
        raise DiagnosticsMissingError(f"trace for {trace.algorithm} seed {trace.seed} has no stored strategies")

    last, best, random, average = [], [], [], []
    rounds = 0
    gap_mass = 0.0
    row_sum = np.zeros(game.rows)
    col_sum = np.zeros(game.cols)
    for record in trace.records:
        n = record.length
        rounds += n
        gap_mass += n * record.duality_gap
        row_sum += n * np.asarray(record.row_strategy)
        col_sum += n * np.asarray(record.col_strategy)

        last.append(record.duality_gap)
        best.append(min(record.duality_gap, best[-1]) if best else record.duality_gap)
        random.append(gap_mass / rounds)
        average.append(duality_gap(game, StrategyPair(Strategy(row_sum / rounds), Strategy(col_sum / rounds))))
    return ConvergenceProfile(
        epochs=[r.epoch for r in trace.records],
        last_iterate=np.array(last),
        best_iterate=np.array(best),
        random_iterate=np.array(random),
        average_iterate=np.array(average),
    )
