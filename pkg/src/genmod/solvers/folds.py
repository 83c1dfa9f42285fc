"""Deterministic k-fold partitions."""

import numpy as np

from ..errors import ConfigurationError


def kfold_indices(n: int, folds: int, seed) -> list[np.ndarray]:
    """Shuffled partition of ``range(n)`` into ``folds`` nearly equal hold-out sets.

    The partition depends only on ``(n, folds, seed)``.
    """
    if folds < 2:
        raise ConfigurationError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise ConfigurationError(f"{n} samples cannot be split into {folds} non-empty folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def complement(n: int, held_out: np.ndarray) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[held_out] = False
    return np.flatnonzero(mask)
