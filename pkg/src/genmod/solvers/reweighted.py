"""Iteratively reweighted Lasso with penalty weights ``1 / (|c_i| + tau)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lasso_cd import lasso_cv_stderr

__all__ = ["IRWResult", "irw_lasso"]


@dataclass
class IRWResult:
    coefficients: np.ndarray
    converged: bool
    tau: float
    iterations: int


def irw_lasso(psi, u, tau0: float = 1e-4, tau_max: float = 1e-1, max_iter: int = 20,
              conv_tol: float = 1e-6, folds: int = 5, fold_seed=0,
              grid_ratio: float = 1e-3) -> IRWResult:
    """Reweighted l1 regression, each step a cross-validated Lasso.

    With ``s = |c_prev| + tau`` the step solves the Lasso on ``psi * s`` and
    sets ``c = s * x``, i.e. the penalty is ``sum |c_i| / (|c_prev_i| + tau)``.
    If ``max_iter`` steps do not bring ``||c_k - c_{k-1}||`` below ``conv_tol``,
    ``tau`` grows tenfold and the loop restarts from the unweighted solution.
    Once ``tau`` would exceed ``tau_max`` the last iterate is returned with
    ``converged=False``.  ``grid_ratio`` sets the floor of every penalty grid
    relative to its top value; it bounds the achievable shrinkage bias.
    """
    psi = np.asarray(psi, dtype=float)
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        return IRWResult(np.zeros(psi.shape[1]), True, tau0, 1)
    start = lasso_cv_stderr(psi, u, folds=folds, fold_seed=fold_seed, ratio=grid_ratio).solution
    tau = tau0
    prev = start
    total = 1
    while True:
        for _ in range(max_iter):
            scale = np.abs(prev) + tau
            x = lasso_cv_stderr(psi * scale, u, folds=folds, fold_seed=fold_seed,
                                ratio=grid_ratio).solution
            current = scale * x
            total += 1
            if np.linalg.norm(current - prev) < conv_tol:
                return IRWResult(current, True, tau, total)
            prev = current
        if tau * 10 > tau_max * (1 + 1e-9):
            return IRWResult(prev, False, tau, total)
        tau *= 10
        prev = start
