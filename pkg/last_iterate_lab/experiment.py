"""Multi-seed experiment orchestration and result persistence."""

import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import AggregateTrace, FitError, SlopeFit, aggregate, convergence_profile, fit_slope
from .config import ExperimentConfig
from .learners import get_learner, run_learner
from .models import GameMatrix, RunTrace
from .plotting import plot_convergence
from .utils.progress import RunProgress

logger = logging.getLogger(__name__)

FIGURE_NAME = "convergence.svg"
SUMMARY_NAME = "summary.json"
CONFIG_NAME = "config.txt"


def trace_filename(algorithm: str, seed: int) -> str:
    return f"{algorithm}_seed{seed}.csv"


def strategies_filename(algorithm: str, seed: int) -> str:
    return f"{algorithm}_seed{seed}_strategies.json"


def aggregate_filename(algorithm: str) -> str:
    return f"aggregate_{algorithm}.csv"


@dataclass
class ExperimentResult:
    game: GameMatrix
    traces: dict[tuple[str, int], RunTrace]
    aggregates: dict[str, AggregateTrace] = field(default_factory=dict)
    fits: dict[str, SlopeFit | None] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)

    def traces_for(self, algorithm: str) -> list[RunTrace]:
        return [trace for (name, _), trace in sorted(self.traces.items()) if name == algorithm]


def _run_job(config: ExperimentConfig, algorithm: str, seed: int, game: GameMatrix) -> RunTrace:
    return run_learner(config, algorithm=algorithm, seed=seed, game=game)


class ExperimentRunner:
    """Runs every (algorithm, seed) job of a config and writes the results."""

    def __init__(self, config: ExperimentConfig | None = None, show_progress: bool = False):
        self.config = config or ExperimentConfig.load()
        self.show_progress = show_progress

    @property
    def jobs(self) -> list[tuple[str, int]]:
        return sorted((algorithm, seed) for algorithm in self.config.algorithms for seed in self.config.seeds)

    def run(self) -> ExperimentResult:
        """Run all jobs; results are keyed and merged by (algorithm, seed)."""
        game = self.config.build_game()
        self.config.validate(game)
        logger.info("Running %d job(s) on %s with %d worker(s)",
                    len(self.jobs), game.describe(), self.config.workers)

        traces: dict[tuple[str, int], RunTrace] = {}
        with RunProgress(len(self.jobs), "Running", enabled=self.show_progress) as progress:
            if self.config.workers > 1 and len(self.jobs) > 1:
                workers = min(self.config.workers, len(self.jobs))
                with ProcessPoolExecutor(max_workers=workers) as executor:
                    futures = {
                        executor.submit(_run_job, self.config, algorithm, seed, game): (algorithm, seed)
                        for algorithm, seed in self.jobs
                    }
                    for future in as_completed(futures):
                        key = futures[future]
                        traces[key] = future.result()
                        progress.advance(f"{key[0]} seed {key[1]}")
            else:
                for algorithm, seed in self.jobs:
                    traces[(algorithm, seed)] = _run_job(self.config, algorithm, seed, game)
                    progress.advance(f"{algorithm} seed {seed}")

        result = ExperimentResult(game=game, traces=dict(sorted(traces.items())))
        for algorithm in self.config.algorithms:
            agg = aggregate(result.traces_for(algorithm), self.config.aggregator)
            result.aggregates[algorithm] = agg
            try:
                result.fits[algorithm] = fit_slope(agg, self.config.t_min_fit)
            except FitError as e:
                logger.warning("No slope for %s: %s", algorithm, e)
                result.fits[algorithm] = None
        return result

    def write(self, result: ExperimentResult) -> list[Path]:
        """Write traces, strategies, aggregates, the summary and the figure."""
        out = Path(self.config.output_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error("Cannot create output directory %s: %s", out, e)
            raise

        files = []
        for (algorithm, seed), trace in result.traces.items():
            files.append(_write(out / trace_filename(algorithm, seed), trace.to_csv()))
            files.append(_write(out / strategies_filename(algorithm, seed), trace.strategies_json() + "\n"))
        for algorithm, agg in result.aggregates.items():
            files.append(_write(out / aggregate_filename(algorithm), agg.to_csv()))

        self.config.save(out / CONFIG_NAME)
        files.append(out / CONFIG_NAME)
        files.append(_write(out / SUMMARY_NAME, json.dumps(self.summary(result), indent=2) + "\n"))

        theory = {name: get_learner(name).THEORY_SLOPE for name in result.aggregates}
        files.append(plot_convergence(
            result.aggregates, result.fits, out / FIGURE_NAME,
            title=result.game.describe(), theory=theory,
        ))
        result.files = files
        return files

    def summary(self, result: ExperimentResult) -> dict:
        """Fitted against predicted slopes and final gaps per algorithm."""
        algorithms = {}
        for algorithm, agg in result.aggregates.items():
            fit = result.fits.get(algorithm)
            traces = result.traces_for(algorithm)
            profiles = [convergence_profile(trace, result.game).final() for trace in traces]
            algorithms[algorithm] = {
                "theory_slope": get_learner(algorithm).THEORY_SLOPE,
                "fit": None if fit is None else {
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "t_min": fit.t_min,
                    "n_points": fit.n_points,
                    "r_squared": fit.r_squared,
                    "excluded": fit.excluded,
                },
                "final_mean_gap": float(agg.mean[-1]),
                "runs": len(traces),
                "runs_all_concentration": sum(all(r.concentration_ok for r in t.records) for t in traces),
                "runs_all_stability": sum(
                    all(max(r.stability_row, r.stability_col) <= 16 * result.game.d for r in t.records)
                    for t in traces
                ),
                "convergence": {
                    key: float(np.mean([p[key] for p in profiles])) for key in profiles[0]
                },
            }
        return {
            "game": result.game.describe(),
            "shape": list(result.game.shape),
            "total_rounds": self.config.total_rounds,
            "delta": self.config.delta,
            "noise": self.config.noise,
            "seeds": list(self.config.seeds),
            "aggregator": self.config.aggregator,
            "algorithms": algorithms,
        }


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def load_trace(path: Path) -> RunTrace:
    """Read a trace CSV and, when present, its strategies sidecar."""
    path = Path(path)
    stem = path.stem
    algorithm = stem.rsplit("_seed", 1)[0] if "_seed" in stem else stem
    trace = RunTrace.from_csv(path.read_text(encoding="utf-8"), algorithm=algorithm)
    sidecar = path.with_name(f"{stem}_strategies.json")
    if sidecar.exists():
        trace.attach_strategies(sidecar.read_text(encoding="utf-8"))
    else:
        logger.debug("No strategies sidecar next to %s", path)
    return trace
