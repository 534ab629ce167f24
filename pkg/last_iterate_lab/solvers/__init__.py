from .igw import DEFAULT_TOL, SolverError, igw_weights, solve_igw
from .matrix_game import MatrixGameSolution, find_equilibrium, matrix_game_path, minimax_lp, solve_matrix_game
from .saddle import RegularizedGame, SaddleSolution, solve_logbarrier_saddle
