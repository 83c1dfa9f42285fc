"""Error measures and the optimization/validation split."""

import math

import numpy as np

from ..data import Dataset
from ..errors import ConfigurationError, DegenerateInputError


def coefficient_error(c_hat, c_ref) -> float:
    """``||c_hat - c_ref|| / ||c_ref||``."""
    c_hat = np.asarray(c_hat, dtype=float)
    c_ref = np.asarray(c_ref, dtype=float)
    if c_hat.shape != c_ref.shape:
        raise ValueError(f"coefficient vectors differ in shape: {c_hat.shape} vs {c_ref.shape}")
    ref = np.linalg.norm(c_ref)
    if ref == 0:
        raise DegenerateInputError("reference coefficients are all zero")
    return float(np.linalg.norm(c_hat - c_ref) / ref)


def reconstruction_error(c_hat, psi_te, u_te) -> float:
    """``||psi_te c_hat - u_te|| / ||u_te||``."""
    u_te = np.asarray(u_te, dtype=float)
    ref = np.linalg.norm(u_te)
    if ref == 0:
        raise DegenerateInputError("test observations are all zero")
    return float(np.linalg.norm(np.asarray(psi_te) @ np.asarray(c_hat) - u_te) / ref)


def improvement_percent(err_method: float, err_genmod: float) -> float:
    if err_method <= 0:
        raise DegenerateInputError("baseline error must be positive to compare against")
    return (err_method - err_genmod) / err_method * 100.0


def split_sizes(n: int, va_fraction: float = 0.2) -> tuple[int, int]:
    if n < 5:
        raise ConfigurationError(f"need at least 5 samples to split, got {n}")
    if not 0 < va_fraction < 1:
        raise ConfigurationError(f"va_fraction must lie in (0, 1), got {va_fraction}")
    n_op = min(n - 1, max(1, math.ceil((1 - va_fraction) * n - 1e-9)))
    return n_op, n - n_op


def split_dataset(ds: Dataset, va_fraction: float = 0.2, seed=0) -> tuple[Dataset, Dataset]:
    """Random partition into optimization and validation parts."""
    n_op, _ = split_sizes(ds.n, va_fraction)
    perm = np.random.default_rng(seed).permutation(ds.n)
    return ds.subset(np.sort(perm[:n_op])), ds.subset(np.sort(perm[n_op:]))
