"""Alternating minimization and a gradient heuristic for mixed linear
regression, with the tooling to measure how fast they converge."""

from .am import AmConfig, Trace, assign_labels, refit, run_am, split_samples
from .data import (GroundTruth, Instance, ParamSet, boundary_radius, perturbed_init,
                   random_truth, read_instance_csv, sample_instance, write_instance_csv)
from .errors import *  # noqa: F401,F403
from .gd import GdConfig, gd_step, run_gd, tune_step_size
from .linalg import EigPairs, solve_least_squares, standard_gaussian_matrix, top_k_eigpairs
from .metrics import (MismatchReport, RateFit, dist, fit_convergence_exponent, loss,
                      mismatch_set, optimization_error_seq)
from .spectral import GridSpec, grid_init, init_subspace, moment_matrix, spectral_init

__version__ = "0.1.0"
