"""Configuration management for last-iterate-lab."""

import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .analysis import AGGREGATORS
from .environment import FEEDBACK_KINDS
from .games import GAME_KINDS, make_game
from .learners import ALGORITHMS
from .models import GameMatrix

logger = logging.getLogger(__name__)

DEFAULT_BASE_DIR = Path.home() / ".last-iterate-lab"
OUTPUT_ENV_VAR = "LAST_ITERATE_LAB_OUTPUT"


class ConfigError(ValueError):
    """An invalid configuration value; ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV_VAR) or str(DEFAULT_BASE_DIR / "runs")


@dataclass
class ExperimentConfig:
    """One experiment: a game, the algorithms to run on it and the seeds to run them with."""

    game_kind: str = "uniform_random"
    game_size: int = 4
    game_rows: int = 0
    game_cols: int = 0
    game_epsilon: float = 0.1
    game_margin: float = 0.1
    game_seed: int = 0
    game_path: str = ""
    algorithms: list[str] = field(default_factory=lambda: ["pmo_lb"])
    total_rounds: int = 2 ** 20
    delta: float = 0.1
    noise: str = "bernoulli_pm1"
    noise_sigma: float = 0.5
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    t_min_fit: int = 1000
    output_dir: str = ""
    diagnostics: bool = False
    solver_tol: float = 1e-9
    gamma_scale: float = 1.0
    workers: int = 1
    aggregator: str = "arithmetic"

    def __post_init__(self):
        if not self.output_dir:
            self.output_dir = default_output_dir()
        if isinstance(self.algorithms, str):
            self.algorithms = _split(self.algorithms)
        if isinstance(self.seeds, str):
            self.seeds = _parse_seeds(self.seeds)

    @property
    def shape(self) -> tuple[int, int]:
        if self.game_kind == "uniform_random" and (self.game_rows or self.game_cols):
            return (self.game_rows or self.game_size, self.game_cols or self.game_size)
        return (self.game_size, self.game_size)

    def build_game(self) -> GameMatrix:
        """Build the configured game; random kinds draw from ``game_seed``."""
        params = {"epsilon": self.game_epsilon, "margin": self.game_margin}
        if self.game_kind == "uniform_random":
            params["rows"], params["cols"] = self.shape
        return make_game(
            self.game_kind,
            d=self.game_size,
            params=params,
            rng=np.random.default_rng(self.game_seed),
            path=self.game_path or None,
        )

    def validate(self, game: GameMatrix | None = None):
        """Raise :class:`ConfigError` naming the first invalid field.

        Passing the built game also checks the algorithms against its shape.
        """
        if self.game_kind not in GAME_KINDS:
            raise ConfigError("game_kind", f"unknown kind {self.game_kind!r}; expected one of {', '.join(GAME_KINDS)}")
        if self.game_kind == "from_file" and not self.game_path:
            raise ConfigError("game_path", "required when game_kind is from_file")
        if self.game_size < 1:
            raise ConfigError("game_size", f"must be >= 1, got {self.game_size}")
        if self.game_rows < 0 or self.game_cols < 0:
            raise ConfigError("game_rows" if self.game_rows < 0 else "game_cols", "must be >= 0")
        if not 0.0 < self.game_epsilon < 1.0:
            raise ConfigError("game_epsilon", f"must lie in (0, 1), got {self.game_epsilon}")
        if not 0.0 < self.game_margin < 1.0:
            raise ConfigError("game_margin", f"must lie in (0, 1), got {self.game_margin}")
        if not self.algorithms:
            raise ConfigError("algorithms", "at least one algorithm is required")
        for name in self.algorithms:
            if name not in ALGORITHMS:
                raise ConfigError("algorithms", f"unknown algorithm {name!r}; expected one of {', '.join(ALGORITHMS)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms", "duplicate algorithm")
        if self.total_rounds < 1:
            raise ConfigError("total_rounds", f"must be >= 1, got {self.total_rounds}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta", f"must lie in (0, 1), got {self.delta}")
        if self.noise not in FEEDBACK_KINDS:
            raise ConfigError("noise", f"unknown model {self.noise!r}; expected one of {', '.join(FEEDBACK_KINDS)}")
        if not self.noise_sigma > 0:
            raise ConfigError("noise_sigma", f"must be positive, got {self.noise_sigma}")
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds", "duplicate seed")
        if self.t_min_fit < 1:
            raise ConfigError("t_min_fit", f"must be >= 1, got {self.t_min_fit}")
        if not self.solver_tol > 0:
            raise ConfigError("solver_tol", f"must be positive, got {self.solver_tol}")
        if not self.gamma_scale > 0:
            raise ConfigError("gamma_scale", f"must be positive, got {self.gamma_scale}")
        if self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}")
        if self.aggregator not in AGGREGATORS:
            raise ConfigError("aggregator", f"unknown aggregator {self.aggregator!r}")

        if game is None and self.game_kind == "from_file":
            return
        cols = game.cols if game is not None else self.shape[1]
        if "falcon" in self.algorithms and cols != 1:
            raise ConfigError("algorithms", f"falcon needs a game with one column, got {cols}")

    def ensure_dirs(self):
        Path(self.output_dir).mkdir(parents=True, exist_ok=True)

    def save(self, path: Path | None = None):
        """Save config as flat ``key = value`` lines."""
        path = path or (DEFAULT_BASE_DIR / "config.txt")
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["# last-iterate-lab experiment configuration"]
        for f in fields(self):
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path | None = None) -> "ExperimentConfig":
        """Load config from a ``key = value`` file, falling back to defaults."""
        path = path or (DEFAULT_BASE_DIR / "config.txt")
        if not path.exists():
            return cls()
        values = {}
        for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep:
                raise ConfigError(key or f"line {line_no}", f"expected 'key = value' at {path}:{line_no}")
            if key not in cls.__dataclass_fields__:
                logger.warning("Ignoring unknown config key %r in %s", key, path)
                continue
            values[key] = _coerce(key, value)
        return cls(**values)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Copy with every non-None override applied."""
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, value in overrides.items():
            if key not in data:
                raise ConfigError(key, "unknown config key")
            if value is not None:
                data[key] = value
        return ExperimentConfig(**data)

    def with_values(self, values: dict[str, str]) -> "ExperimentConfig":
        """Copy with text values parsed the way :meth:`load` parses them."""
        for key in values:
            if key not in self.__dataclass_fields__:
                raise ConfigError(key, "unknown config key")
        return self.with_overrides(**{key: _coerce(key, value) for key, value in values.items()})


def _split(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _parse_seeds(text: str) -> list[int]:
    """``0,1,2`` or a ``0-9`` range (inclusive), or a mix of both."""
    seeds: list[int] = []
    for part in _split(text):
        try:
            if "-" in part:
                lo, hi = part.split("-", 1)
                seeds.extend(range(int(lo), int(hi) + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise ConfigError("seeds", f"cannot parse {part!r}") from None
    return seeds


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    return str(value)


def _coerce(key: str, value: str):
    kind = ExperimentConfig.__dataclass_fields__[key].type
    try:
        if key == "seeds":
            return _parse_seeds(value)
        if key == "algorithms":
            return _split(value)
        if kind in (bool, "bool"):
            if value.lower() not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(value)
            return value.lower() in ("true", "yes", "1")
        if kind in (int, "int"):
            return int(value)
        if kind in (float, "float"):
            return float(value)
    except ValueError:
        raise ConfigError(key, f"cannot parse {value!r}") from None
    return value
