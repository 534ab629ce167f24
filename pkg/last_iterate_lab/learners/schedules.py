"""Learning-rate and exploration schedules. All logarithms are natural."""

import math


def _check(s: int, delta: float | None = None):
    if s < 1:
        raise ValueError(f"epochs start at 1, got {s}")
    if delta is not None and not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def gamma_pmo_lb(s: int, d: int, delta: float) -> float:
    """``128 d 2^(-s/2) sqrt(log(8 d^2 s^2 / delta))``."""
    _check(s, delta)
    return 128.0 * d * 2.0 ** (-s / 2.0) * math.sqrt(math.log(8.0 * d * d * s * s / delta))


def gamma_falcon(s: int, d: int, delta: float) -> float:
    """``40 * 2^(-s/2) sqrt(log(8 d s^2 / delta))``, five times the single-player beta."""
    _check(s, delta)
    return 40.0 * 2.0 ** (-s / 2.0) * math.sqrt(math.log(8.0 * d * s * s / delta))


def alpha_ne_uniform(s: int, d: int) -> float:
    """Exploration weight ``sqrt(d) 2^(-(s-1)/4)``, clamped to 1."""
    _check(s)
    return min(1.0, math.sqrt(d) * 2.0 ** (-(s - 1) / 4.0))
