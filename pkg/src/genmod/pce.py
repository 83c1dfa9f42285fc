"""Total-degree Legendre polynomial chaos basis.

Multi-indices are ordered by total degree first; among indices of equal total
degree, the one with the larger entry at the first differing position comes
first.  For ``d=2, p=2`` this gives::

    (0,0), (1,0), (0,1), (2,0), (1,1), (0,2)

Univariate polynomials are orthonormal with respect to the uniform probability
measure on [-1, 1], i.e. ``psi_j = sqrt(2j+1) * P_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .errors import ConfigurationError, DomainError

__all__ = [
    "MultiIndexBasis",
    "basis_size",
    "build_basis",
    "legendre_eval",
    "legendre_table",
    "multivariate_eval",
    "assemble_matrix",
    "sup_bound",
]

# column indices are stored as intp; refuse anything a 32-bit index cannot address
_MAX_BASIS_SIZE = np.iinfo(np.int32).max


@dataclass(frozen=True, eq=False)
class MultiIndexBasis:
    """Ordered total-degree multi-index set.

    Attributes
    ----------
    d : int
        Number of random inputs.
    p : int
        Maximum total degree.
    indices : (P, d) ndarray of int
        Multi-indices in basis order (read-only).
    """

    d: int
    p: int
    indices: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    def __len__(self) -> int:
        return self.size

    @cached_property
    def total_degree(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    @cached_property
    def log_multinomial(self) -> np.ndarray:
        """``log(|alpha|! / prod_j alpha_j!)`` for every index."""
        alpha = self.indices
        out = gammaln(alpha.sum(axis=1) + 1.0) - gammaln(alpha + 1.0).sum(axis=1)
        out.setflags(write=False)
        return out

    def position(self, alpha) -> int:
        """Column position of a multi-index; raises ``KeyError`` if absent."""
        key = tuple(int(a) for a in alpha)
        try:
            return self._lookup[key]
        except KeyError:
            raise KeyError(f"multi-index {key} is not in the basis") from None

    @cached_property
    def _lookup(self) -> dict:
        return {tuple(int(a) for a in row): i for i, row in enumerate(self.indices)}


def basis_size(d: int, p: int) -> int:
    """Cardinality ``(p+d)! / (p! d!)`` of the total-degree set."""
    return math.comb(p + d, d)


def _compositions(total: int, parts: int):
    # yields in the basis tie order: larger leading entries first
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def build_basis(d: int, p: int) -> MultiIndexBasis:
    """Build the ordered multi-index set of dimension ``d`` and total degree ``p``."""
    if int(d) != d or d < 1:
        raise ConfigurationError(f"d must be a positive integer, got {d!r}")
    if int(p) != p or p < 0:
        raise ConfigurationError(f"p must be a non-negative integer, got {p!r}")
    d, p = int(d), int(p)
    size = basis_size(d, p)
    if size > _MAX_BASIS_SIZE:
        raise ConfigurationError(
            f"basis with d={d}, p={p} has {size} terms, exceeding the index width"
        )
    indices = np.empty((size, d), dtype=np.intp)
    row = 0
    for degree in range(p + 1):
        for alpha in _compositions(degree, d):
            indices[row] = alpha
            row += 1
    indices.setflags(write=False)
    return MultiIndexBasis(d=d, p=p, indices=indices)


def _check_domain(y: np.ndarray) -> None:
    bad = ~(np.abs(y) <= 1.0)
    if np.any(bad):
        loc = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DomainError(f"value {y[loc]!r} at position {loc} is outside [-1, 1]")


def legendre_table(y, degree: int) -> np.ndarray:
    """Orthonormal Legendre values ``psi_0..psi_degree`` at every entry of ``y``.

    Returns an array of shape ``y.shape + (degree + 1,)``.
    """
    y = np.asarray(y, dtype=float)
    _check_domain(y)
    out = np.empty(y.shape + (degree + 1,))
    out[..., 0] = 1.0
    if degree >= 1:
        out[..., 1] = y
    # (j+1) P_{j+1} = (2j+1) y P_j - j P_{j-1}
    for j in range(1, degree):
        out[..., j + 1] = ((2 * j + 1) * y * out[..., j] - j * out[..., j - 1]) / (j + 1)
    out *= np.sqrt(2.0 * np.arange(degree + 1) + 1.0)
    return out


def legendre_eval(j: int, y):
    """Orthonormal Legendre polynomial of degree ``j`` at ``y`` (scalar or array)."""
    if j < 0:
        raise DomainError(f"degree must be non-negative, got {j}")
    vals = legendre_table(y, j)[..., j]
    return float(vals) if np.ndim(vals) == 0 else vals


def multivariate_eval(alpha, y) -> float:
    """Tensor-product polynomial ``prod_i psi_{alpha_i}(y_i)``."""
    alpha = np.asarray(alpha, dtype=np.intp)
    y = np.asarray(y, dtype=float)
    if alpha.ndim != 1 or y.shape != alpha.shape:
        raise ValueError(
            f"multi-index of length {alpha.size} does not match point of shape {y.shape}"
        )
    if np.any(alpha < 0):
        raise DomainError("multi-index entries must be non-negative")
    top = int(alpha.max(initial=0))
    table = legendre_table(y, top)
    return float(np.prod(table[np.arange(alpha.size), alpha]))


def sup_bound(p: int) -> float:
    """Uniform bound ``3**(p/2)`` on the basis functions of total degree <= p."""
    return 3.0 ** (p / 2.0)


def assemble_matrix(basis: MultiIndexBasis, samples) -> np.ndarray:
    """Measurement matrix ``Psi[i, j] = psi_{alpha_j}(y_i)``.

    Parameters
    ----------
    basis : MultiIndexBasis
    samples : (N, d) array_like
        Sample points in ``[-1, 1]^d``.

    Returns
    -------
    (N, P) ndarray
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[1] != basis.d:
        raise ValueError(f"samples have {samples.shape[1]} columns, basis has d={basis.d}")
    table = legendre_table(samples, basis.p)  # (N, d, p+1)
    psi = np.ones((samples.shape[0], basis.size))
    for i in range(basis.d):
        col = basis.indices[:, i]
        if np.any(col):
            psi *= table[:, i, col]
    bound = sup_bound(basis.p)
    peak = np.max(np.abs(psi), initial=0.0)
    if peak > bound * (1.0 + 1e-12):
        raise ArithmeticError(f"basis value {peak} exceeds the sup bound {bound}")
    return psi
