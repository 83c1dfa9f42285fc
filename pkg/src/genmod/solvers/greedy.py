"""Orthogonal matching pursuit and its cross-validated variant."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import ConfigurationError, NumericalDegeneracyError
from .folds import complement, kfold_indices

__all__ = ["OMPResult", "omp", "omp_cv", "default_max_atoms"]

# a new column whose component orthogonal to the current support is this small
# (relative to its norm) is treated as linearly dependent
_DEPENDENCE_TOL = 1e-10


@dataclass
class OMPResult:
    support: np.ndarray
    coefficients: np.ndarray
    residual_norm: float


class _GreedyPath:
    """Incremental OMP state: orthonormal basis of the selected columns plus R."""

    def __init__(self, psi, u):
        self.psi = psi
        self.u = u
        n = psi.shape[0]
        self.norms = np.linalg.norm(psi, axis=0)
        self.q = np.empty((n, 0))
        self.r = np.empty((0, 0))
        self.qtu = np.empty(0)
        self.support: list[int] = []
        self.residual = u.copy()

    def next_column(self) -> int | None:
        corr = np.abs(self.psi.T @ self.residual)
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = np.where(self.norms > 0, corr / self.norms, 0.0)
        corr[self.support] = -1.0
        j = int(np.argmax(corr))
        return j if corr[j] > 0 else None

    def add(self, j: int) -> bool:
        """Append column ``j``; returns False if it depends on the support."""
        col = self.psi[:, j]
        proj = self.q.T @ col
        v = col - self.q @ proj
        # one re-orthogonalization pass keeps Q orthonormal to working precision
        extra = self.q.T @ v
        v -= self.q @ extra
        proj += extra
        norm = np.linalg.norm(v)
        if norm <= _DEPENDENCE_TOL * self.norms[j]:
            return False
        k = len(self.support)
        r = np.zeros((k + 1, k + 1))
        r[:k, :k] = self.r
        r[:k, k] = proj
        r[k, k] = norm
        qk = v / norm
        self.q = np.column_stack([self.q, qk])
        self.r = r
        self.qtu = np.append(self.qtu, qk @ self.u)
        self.support.append(j)
        self.residual = self.u - self.q @ self.qtu
        return True

    def support_coefficients(self) -> np.ndarray:
        if not self.support:
            return np.empty(0)
        return scipy.linalg.solve_triangular(self.r, self.qtu)

    def dense_coefficients(self) -> np.ndarray:
        c = np.zeros(self.psi.shape[1])
        c[self.support] = self.support_coefficients()
        return c


def _check_inputs(psi, u):
    psi = np.asarray(psi, dtype=float)
    u = np.asarray(u, dtype=float)
    if psi.ndim != 2 or u.shape != (psi.shape[0],):
        raise ValueError(f"matrix {psi.shape} and vector {u.shape} are inconsistent")
    return psi, u


def _is_exhausted(path: _GreedyPath, unorm: float) -> bool:
    return np.linalg.norm(path.residual) <= 1e-14 * max(unorm, 1e-300)


def omp(psi, u, n_atoms: int) -> OMPResult:
    """Greedy sparse fit with at most ``n_atoms`` columns.

    Each step selects the column with the largest normalized correlation with
    the residual and refits by least squares on the whole support.  Selection
    stops early once the residual vanishes.

    Raises
    ------
    NumericalDegeneracyError
        If the selected column is linearly dependent on the current support.
    """
    psi, u = _check_inputs(psi, u)
    n, p = psi.shape
    if not 1 <= n_atoms <= min(n, p):
        raise ConfigurationError(f"n_atoms must lie in [1, {min(n, p)}], got {n_atoms}")
    path = _GreedyPath(psi, u)
    unorm = float(np.linalg.norm(u))
    while len(path.support) < n_atoms and not _is_exhausted(path, unorm):
        j = path.next_column()
        if j is None:
            break
        if not path.add(j):
            raise NumericalDegeneracyError(
                f"column {j} is linearly dependent on the selected support", pivot=j
            )
    return OMPResult(
        support=np.array(path.support, dtype=np.intp),
        coefficients=path.dense_coefficients(),
        residual_norm=float(np.linalg.norm(path.residual)),
    )


def default_max_atoms(n: int, p: int, folds: int) -> int:
    return max(1, min(n - math.ceil(n / folds), p, int(10 * math.sqrt(n))))


def _holdout_errors(psi_tr, u_tr, psi_ho, u_ho, max_atoms: int) -> np.ndarray:
    # error for every atom count 1..max_atoms; once the path stops, later counts
    # reuse the last fit
    path = _GreedyPath(psi_tr, u_tr)
    unorm = float(np.linalg.norm(u_tr))
    errors = np.empty(max_atoms)
    last = float(np.sum(u_ho**2))
    for k in range(max_atoms):
        if not _is_exhausted(path, unorm):
            j = path.next_column()
            if j is not None and path.add(j):
                resid = psi_ho[:, path.support] @ path.support_coefficients() - u_ho
                last = float(resid @ resid)
        errors[k] = last
    return errors


def omp_cv(psi, u, folds: int = 5, fold_seed=0, max_atoms: int | None = None) -> OMPResult:
    """OMP with the atom count chosen by k-fold cross-validation.

    The count minimizing the mean squared hold-out error (smallest count on
    ties) is refit on all rows.
    """
    psi, u = _check_inputs(psi, u)
    n, p = psi.shape
    parts = kfold_indices(n, folds, fold_seed)
    if max_atoms is None:
        max_atoms = default_max_atoms(n, p, folds)
    smallest_train = n - max(len(h) for h in parts)
    max_atoms = int(min(max_atoms, smallest_train, p))
    if max_atoms < 1:
        raise ConfigurationError("no atoms can be fitted with this fold layout")
    errors = np.empty((folds, max_atoms))
    for f, held in enumerate(parts):
        train = complement(n, held)
        errors[f] = _holdout_errors(psi[train], u[train], psi[held], u[held], max_atoms)
    best = int(np.argmin(errors.mean(axis=0))) + 1
    return omp(psi, u, best)
