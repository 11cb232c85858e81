"""Stochastic low-rank kernel learning for regression."""
from ._accel import USING_NUMBA, backend_name
from .datasets import SplitSpec, gen_sinc, load_abalone, load_delimited, standardize, train_test_split
from .kernel import ColumnSource, Dataset, DegenerateLandmarkError, KernelSpec, compute_column, eval_kernel, gram_matrix
from .lowrank import (InverseState, SingularMatrixError, apply_inverse, block_inverse_add, new_state, rebuild,
                      update_weight, woodbury_inverse)
from .objective import ObjectiveParams, grad_coord, hess_coord, higher_partial, objective_value
from .optimizer import TrainConfig, TrainTrace, newton_coordinate_step, scnd_iteration, train_slkl
from .regression import ModelSolution, krr_full, krr_subset, mse, predict, unif_baseline

__version__ = "0.1.0"
