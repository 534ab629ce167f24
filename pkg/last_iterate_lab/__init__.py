"""last-iterate-lab - last-iterate learning in zero-sum matrix games under bandit feedback."""

from .analysis import aggregate, convergence_profile, fit_slope, lemma_report
from .config import ConfigError, ExperimentConfig
from .environment import EpochSchedule, FeedbackModel, estimate_game, run_epoch
from .experiment import ExperimentRunner
from .games import duality_gap, instantaneous_regret, make_game, sample_action
from .learners import run_learner, step_epoch
from .models import GameMatrix, RunTrace, Strategy, StrategyPair
from .solvers import solve_igw, solve_logbarrier_saddle, solve_matrix_game

__all__ = [
    "ConfigError",
    "EpochSchedule",
    "ExperimentConfig",
    "ExperimentRunner",
    "FeedbackModel",
    "GameMatrix",
    "RunTrace",
    "Strategy",
    "StrategyPair",
    "aggregate",
    "convergence_profile",
    "duality_gap",
    "estimate_game",
    "fit_slope",
    "instantaneous_regret",
    "lemma_report",
    "make_game",
    "run_epoch",
    "run_learner",
    "sample_action",
    "solve_igw",
    "solve_logbarrier_saddle",
    "solve_matrix_game",
    "step_epoch",
]
__version__ = "0.1.0"
