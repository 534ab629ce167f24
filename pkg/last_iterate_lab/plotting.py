"""Log-log duality-gap figure over the epoch-level aggregates."""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
logging.getLogger("matplotlib").setLevel(logging.WARNING)
import matplotlib.pyplot as plt  # noqa: E402

from .analysis import AggregateTrace, SlopeFit  # noqa: E402

logger = logging.getLogger(__name__)

LINE_STYLES = ["-", "--", "-.", ":"]
MARKERS = ["o", "s", "^", "D"]
SVG_HASH_SALT = "last-iterate-lab"


def figure_points(aggregates: dict[str, AggregateTrace]) -> dict[str, tuple[list[int], list[float]]]:
    """(round, mean gap) per epoch end, as plotted; nonpositive means cannot sit on a log axis."""
    points = {}
    for name, agg in aggregates.items():
        ts, gaps = [], []
        for t_end, gap in zip(agg.t_end, agg.mean.tolist()):
            if gap > 0:
                ts.append(int(t_end))
                gaps.append(float(gap))
        points[name] = (ts, gaps)
    return points


def plot_convergence(
    aggregates: dict[str, AggregateTrace],
    fits: dict[str, SlopeFit | None],
    path: Path,
    title: str = "",
    theory: dict[str, float] | None = None,
) -> Path:
    """Write the SVG with one curve per algorithm and the fitted slopes in the legend.

    Args:
        aggregates: Aggregate per algorithm, in legend order.
        fits: Slope fit per algorithm, ``None`` where the fit was not possible.
        path: Output SVG path.
        title: Figure title, usually the game description.
        theory: Predicted slope per algorithm, shown next to the fit.

    Returns:
        The written path.
    """
    theory = theory or {}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # Fixed ids and no timestamp so reruns produce identical files.
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        fig, ax = plt.subplots(figsize=(7, 5), facecolor="white")
        for k, (name, (ts, gaps)) in enumerate(figure_points(aggregates).items()):
            fit = fits.get(name)
            label = name
            if fit is not None:
                label += f" (slope {fit.slope:.3f}"
                if name in theory:
                    label += f", theory {theory[name]:g}"
                label += ")"
            ax.plot(ts, gaps, linestyle=LINE_STYLES[k % len(LINE_STYLES)],
                    marker=MARKERS[k % len(MARKERS)], markersize=4, linewidth=1.5, label=label)

        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("round t")
        ax.set_ylabel("duality gap")
        if title:
            ax.set_title(title)
        ax.grid(True, which="both", linestyle="--", alpha=0.5)
        if aggregates:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info("Saved figure: %s", path)
    return path
