"""Sparse regression solvers used as baselines and inner steps."""

from .folds import kfold_indices
from .reweighted import IRWResult, irw_lasso
from .lasso_cd import LassoPathResult, kkt_violation, lambda_grid, lasso, lasso_cv_stderr, lasso_path
from .lstsq import least_squares
from .greedy import OMPResult, omp, omp_cv

__all__ = [
    "IRWResult",
    "LassoPathResult",
    "OMPResult",
    "irw_lasso",
    "kfold_indices",
    "kkt_violation",
    "lambda_grid",
    "lasso",
    "lasso_cv_stderr",
    "lasso_path",
    "least_squares",
    "omp",
    "omp_cv",
]
