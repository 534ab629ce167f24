"""CLI interface for last-iterate-lab."""

import logging
import os
import sys
from pathlib import Path

# Fix Windows console encoding for the "×" in game descriptions
if sys.platform == "win32":
    os.environ.setdefault("PYTHONIOENCODING", "utf-8")
    try:
        sys.stdout.reconfigure(encoding="utf-8", errors="replace")
        sys.stderr.reconfigure(encoding="utf-8", errors="replace")
    except Exception:
        pass

import typer
from rich.console import Console
from rich.table import Table

from .analysis import AggregateTrace, DEFAULT_T_MIN, fit_slope, lemma_report
from .config import DEFAULT_BASE_DIR, ExperimentConfig
from .experiment import ExperimentRunner, load_trace
from .games import load_matrix_csv
from .solvers import solve_matrix_game

app = typer.Typer(
    name="last-iterate-lab",
    help="Run and analyze last-iterate learning dynamics for zero-sum matrix games under bandit feedback.",
    no_args_is_help=True,
)
console = Console()

VALIDATE_TOL = 1e-6


def _setup_logging(verbose: bool = False):
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


def _fail(error: Exception):
    """One machine-parsable line on stderr, then exit 1."""
    typer.echo(f"error: {type(error).__name__}: {error}", err=True)
    raise typer.Exit(1)


def _fmt(value: float | None, spec: str = ".4f") -> str:
    return "-" if value is None else format(value, spec)


@app.command()
def run(
    config_path: Path = typer.Option(None, "--config", "-c", help="key = value config file."),
    game: str = typer.Option(None, "--game", "-g", help="Game kind, e.g. uniform_random, matching_pennies."),
    size: int = typer.Option(None, "--size", "-d", help="Actions per player for generated games."),
    rows: int = typer.Option(None, "--rows", help="Row actions (uniform_random)."),
    cols: int = typer.Option(None, "--cols", help="Column actions (uniform_random)."),
    epsilon: float = typer.Option(None, "--epsilon", help="Epsilon of epsilon_example."),
    game_seed: int = typer.Option(None, "--game-seed", help="Seed of the game generator."),
    matrix: Path = typer.Option(None, "--matrix", "-m", help="CSV game matrix (implies --game from_file)."),
    algorithms: str = typer.Option(None, "--algorithms", "-a", help="Comma-separated: pmo_lb,falcon,ne_uniform."),
    rounds: int = typer.Option(None, "--rounds", "-T", help="Total rounds T."),
    delta: float = typer.Option(None, "--delta", help="Confidence parameter in (0, 1)."),
    noise: str = typer.Option(None, "--noise", help="bernoulli_pm1, clipped_gaussian or deterministic."),
    sigma: float = typer.Option(None, "--sigma", help="Noise scale for clipped_gaussian."),
    seeds: str = typer.Option(None, "--seeds", "-s", help="Seeds, e.g. 0-9 or 1,3,5."),
    t_min: int = typer.Option(None, "--t-min", help="First round used by slope fits."),
    output_dir: str = typer.Option(None, "--output-dir", "-o", help="Directory for traces, summary and figure."),
    diagnostics: bool = typer.Option(None, "--diagnostics/--no-diagnostics", help="Record inequality slacks."),
    solver_tol: float = typer.Option(None, "--solver-tol", help="Solver tolerance."),
    gamma_scale: float = typer.Option(None, "--gamma-scale", help="Multiplier on the learning-rate schedule."),
    workers: int = typer.Option(None, "--workers", "-j", help="Parallel (algorithm, seed) jobs."),
    aggregator: str = typer.Option(None, "--aggregator", help="arithmetic or geometric mean across seeds."),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="No progress bar or summary table."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose logging."),
):
    """Run every (algorithm, seed) job and write traces, aggregates, a summary and an SVG."""
    _setup_logging(verbose)
    try:
        config = ExperimentConfig.load(config_path) if config_path else ExperimentConfig()
        config = config.with_overrides(
            game_kind="from_file" if matrix else game,
            game_path=str(matrix) if matrix else None,
            game_size=size,
            game_rows=rows,
            game_cols=cols,
            game_epsilon=epsilon,
            game_seed=game_seed,
            algorithms=algorithms,
            total_rounds=rounds,
            delta=delta,
            noise=noise,
            noise_sigma=sigma,
            seeds=seeds,
            t_min_fit=t_min,
            output_dir=output_dir,
            diagnostics=diagnostics,
            solver_tol=solver_tol,
            gamma_scale=gamma_scale,
            workers=workers,
            aggregator=aggregator,
        )
        config.validate()
        runner = ExperimentRunner(config, show_progress=not quiet)
        result = runner.run()
        files = runner.write(result)
    except (ValueError, RuntimeError, OSError) as e:
        _fail(e)

    if quiet:
        return
    table = Table(title=f"{result.game.describe()}, T={config.total_rounds}")
    table.add_column("Algorithm", style="cyan")
    table.add_column("Runs", justify="right")
    table.add_column("Final mean gap", justify="right")
    table.add_column("Slope", justify="right")
    table.add_column("Theory", justify="right")
    table.add_column("R²", justify="right")
    summary = runner.summary(result)["algorithms"]
    for algorithm, fit in result.fits.items():
        table.add_row(
            algorithm,
            str(summary[algorithm]["runs"]),
            f"{summary[algorithm]['final_mean_gap']:.3e}",
            _fmt(fit.slope if fit else None),
            f"{summary[algorithm]['theory_slope']:g}",
            _fmt(fit.r_squared if fit else None, ".3f"),
        )
    console.print(table)
    console.print(f"[green]Wrote {len(files)} file(s) to {config.output_dir}[/green]")


@app.command()
def validate(
    matrix: Path = typer.Argument(help="CSV game matrix."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose logging."),
):
    """Check a matrix file and report its shape, range, skew-symmetry and value."""
    _setup_logging(verbose)
    try:
        game = load_matrix_csv(matrix)
        _, value = solve_matrix_game(game.entries, VALIDATE_TOL)
    except (ValueError, RuntimeError, OSError) as e:
        _fail(e)

    # round() then +0.0 so a value of -1e-12 prints as 0.000000.
    console.print(f"{game.describe()}, value {round(value, 6) + 0.0:.6f}", highlight=False)
    console.print(
        f"entries in [{game.entries.min():.6g}, {game.entries.max():.6g}]",
        highlight=False,
    )


def _fit_source(path: Path):
    text = path.read_text(encoding="utf-8")
    if text.startswith("epoch,t_start,t_end,mean_gap"):
        return AggregateTrace.from_csv(text, algorithm=path.stem.removeprefix("aggregate_"))
    return load_trace(path)


@app.command()
def fit(
    paths: list[Path] = typer.Argument(help="Aggregate or trace CSV files, or run directories."),
    t_min: int = typer.Option(DEFAULT_T_MIN, "--t-min", help="First round used by the fit."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose logging."),
):
    """Re-fit log-log slopes from existing CSV files."""
    _setup_logging(verbose)
    files = []
    for path in paths:
        files.extend(sorted(path.glob("aggregate_*.csv")) if path.is_dir() else [path])
    if not files:
        _fail(FileNotFoundError("no aggregate CSV files found"))

    table = Table(title=f"Slope fits (t >= {t_min})")
    table.add_column("File", style="cyan")
    table.add_column("Slope", justify="right")
    table.add_column("Intercept", justify="right")
    table.add_column("R²", justify="right")
    table.add_column("Points", justify="right")
    table.add_column("Excluded", justify="right")
    try:
        for path in files:
            result = fit_slope(_fit_source(path), t_min)
            table.add_row(path.name, f"{result.slope:.4f}", f"{result.intercept:.4f}",
                          f"{result.r_squared:.4f}", str(result.n_points), str(result.excluded))
    except (ValueError, OSError) as e:
        _fail(e)
    console.print(table)


@app.command()
def report(
    paths: list[Path] = typer.Argument(help="Trace CSV files (strategies sidecars are read when present)."),
    delta: float = typer.Option(0.1, "--delta", help="Confidence parameter the runs used."),
    d: int = typer.Option(0, "--d", help="Effective dimension; read from the sidecar when 0."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Verbose logging."),
):
    """Per-epoch stability, concentration and saddle-inequality report for diagnostic runs."""
    _setup_logging(verbose)
    try:
        reports = [lemma_report(load_trace(path), d or None, delta) for path in paths]
    except (ValueError, OSError) as e:
        _fail(e)

    for rep in reports:
        table = Table(title=f"{rep.algorithm} seed {rep.seed} (stability bound {rep.stability_bound:g})")
        table.add_column("Epoch", justify="right")
        table.add_column("Stability", justify="right")
        table.add_column("Stable", justify="center")
        table.add_column("Beta", justify="right")
        table.add_column("Concentration", justify="center")
        table.add_column("Saddle slack", justify="right")
        for e in rep.epochs:
            table.add_row(
                str(e.epoch),
                f"{e.stability_ratio:.3f}",
                "[green]yes[/green]" if e.stability_ok else "[red]no[/red]",
                _fmt(e.beta, ".3g"),
                "[green]yes[/green]" if e.concentration_ok else "[red]no[/red]",
                _fmt(e.saddle_slack, ".3e"),
            )
        console.print(table)
        console.print(rep.summary_line(), highlight=False)


@app.command()
def config_cmd(
    show: bool = typer.Option(True, "--show", help="Show current config."),
    set_values: list[str] = typer.Option(None, "--set", help="key=value to store; repeatable."),
    path: Path = typer.Option(None, "--path", help=f"Config file (default {DEFAULT_BASE_DIR / 'config.txt'})."),
):
    """View or update the default experiment configuration."""
    path = path or (DEFAULT_BASE_DIR / "config.txt")
    try:
        cfg = ExperimentConfig.load(path)
        if set_values:
            overrides = {}
            for item in set_values:
                key, sep, value = item.partition("=")
                if not sep:
                    raise ValueError(f"expected key=value, got {item!r}")
                overrides[key.strip()] = value.strip()
            cfg = cfg.with_values(overrides)
            cfg.validate()
            cfg.save(path)
            console.print(f"[green]Saved {', '.join(overrides)} to {path}[/green]")
            return
    except (ValueError, OSError) as e:
        _fail(e)

    if show:
        console.print("[bold]Current configuration:[/bold]")
        for key, value in vars(cfg).items():
            console.print(f"  {key:<14} {value}", highlight=False)


if __name__ == "__main__":
    app()
