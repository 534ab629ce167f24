import numpy as np
import pytest

from last_iterate_lab.config import ExperimentConfig
from last_iterate_lab.games import ROCK_PAPER_SCISSORS, make_game, save_matrix_csv
from last_iterate_lab.models import GameMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def epsilon_game():
    return make_game("epsilon_example", params={"epsilon": 0.1})


@pytest.fixture
def rps_game():
    return GameMatrix(np.array(ROCK_PAPER_SCISSORS))


@pytest.fixture
def rps_csv(tmp_path, rps_game):
    path = tmp_path / "rps.csv"
    save_matrix_csv(rps_game, path)
    return path


@pytest.fixture
def fixture_catalog():
    """Every generator kind at small sizes, for oracle sweeps."""
    return {
        "rock_paper_scissors": make_game("rock_paper_scissors"),
        "matching_pennies": make_game("matching_pennies"),
        "epsilon_example": make_game("epsilon_example", params={"epsilon": 0.1}),
        "uniform_random": make_game("uniform_random", d=5, rng=np.random.default_rng(1)),
        "uniform_rectangular": make_game("uniform_random", params={"rows": 3, "cols": 6}, rng=np.random.default_rng(2)),
        "skew_symmetric_random": make_game("skew_symmetric_random", d=6, rng=np.random.default_rng(3)),
        "psne_diagonal": make_game("psne_diagonal", d=4, rng=np.random.default_rng(4)),
    }


@pytest.fixture
def small_config(tmp_path):
    return ExperimentConfig(
        game_kind="uniform_random",
        game_size=3,
        game_seed=7,
        algorithms=["pmo_lb"],
        total_rounds=2 ** 8,
        seeds=[0, 1],
        output_dir=str(tmp_path / "out"),
    )
