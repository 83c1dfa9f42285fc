"""One-dimensional stochastic diffusion benchmark.

The diffusion coefficient is a truncated Karhunen-Loeve expansion of a
Gaussian-kernel random field on (0, 1),

    a(x, y) = a_bar + sigma * sum_i sqrt(lam_i) phi_i(x) y_i,   y in [-1, 1]^d,

and the observed quantity is u(0.5) where -(a u')' = 1, u(0) = u(1) = 0,
discretized with quadratic Lagrange elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.linalg

from .data import GENERATOR_VERSION, Dataset
from .errors import CoefficientPositivityError, ConfigurationError, DomainError

__all__ = [
    "KlExpansion",
    "FemMesh",
    "kl_eigenpairs",
    "diffusion_eval",
    "fem_solve",
    "qoi_sample",
    "qoi_batch",
    "generate_dataset",
]

_GAUSS3_POINTS = 0.5 + 0.5 * np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GAUSS3_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0


def _kernel(x1, x2, length):
    return np.exp(-((x1[:, None] - x2[None, :]) ** 2) / length**2)


@dataclass(frozen=True, eq=False)
class KlExpansion:
    """Top eigenpairs of the Gaussian covariance operator on (0, 1).

    ``node_values[k, i]`` is the i-th eigenfunction at ``nodes[k]``; values
    elsewhere come from the Nystrom extension ``phi(x) = sum_k w_k C(x, x_k)
    phi(x_k) / lam``.
    """

    eigenvalues: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    node_values: np.ndarray
    length: float
    a_bar: float = 0.1
    sigma: float = 0.03
    all_eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.eigenvalues.size

    def eigenfunctions(self, x) -> np.ndarray:
        """Eigenfunction values at points ``x``; shape ``x.shape + (d,)``."""
        x = np.asarray(x, dtype=float)
        kern = _kernel(x.reshape(-1), self.nodes, self.length)
        vals = (kern * self.weights) @ self.node_values / self.eigenvalues
        return vals.reshape(x.shape + (self.d,))

    def modes(self, x) -> np.ndarray:
        """``sigma * sqrt(lam_i) * phi_i(x)``, the per-input field contributions."""
        return self.sigma * np.sqrt(self.eigenvalues) * self.eigenfunctions(x)

    @cached_property
    def positivity_margin(self) -> float:
        """Smallest coefficient value over ``[0, 1] x [-1, 1]^d``.

        For fixed ``x`` the worst input is ``y_i = -sign(phi_i(x))``, so the
        infimum is ``min_x a_bar - sum_i |modes_i(x)|``, taken on a fine grid.
        """
        grid = np.linspace(0.0, 1.0, 4001)
        return float(self.a_bar - np.abs(self.modes(grid)).sum(axis=1).max())

    @cached_property
    def crude_positivity_margin(self) -> float:
        """``a_bar - sigma * sum_i sqrt(lam_i) max_x |phi_i(x)|``; sufficient but loose."""
        grid = np.linspace(0.0, 1.0, 4001)
        peaks = np.abs(self.eigenfunctions(grid)).max(axis=0)
        return float(self.a_bar - self.sigma * np.sum(np.sqrt(self.eigenvalues) * peaks))

    def require_positive(self) -> None:
        if not self.positivity_margin > 0:
            raise CoefficientPositivityError(
                f"diffusion coefficient can reach {self.positivity_margin:.3g} <= 0 on [0,1] x [-1,1]^d"
            )


def kl_eigenpairs(length: float, d: int, n_quad: int = 200, a_bar: float = 0.1,
                  sigma: float = 0.03) -> KlExpansion:
    """Nystrom discretization on Gauss-Legendre nodes of (0, 1).

    Eigenfunctions are L2-normalized and signed so that their value at the
    first node is non-negative.
    """
    if not length > 0:
        raise ConfigurationError(f"correlation length must be positive, got {length}")
    if d < 1 or n_quad < 4 * d:
        raise ConfigurationError(f"need n_quad >= 4d, got n_quad={n_quad}, d={d}")
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(n_quad)
    nodes = 0.5 * (ref_nodes + 1.0)
    weights = 0.5 * ref_weights
    root_w = np.sqrt(weights)
    sym = root_w[:, None] * _kernel(nodes, nodes, length) * root_w[None, :]
    evals, evecs = scipy.linalg.eigh(sym)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    top = evals[:d]
    if not np.all(top > 0):
        raise ConfigurationError(
            f"only {int(np.sum(evals > 0))} positive eigenvalues resolved; reduce d or refine"
        )
    values = evecs[:, :d] / root_w[:, None]
    values *= np.where(values[0] < 0, -1.0, 1.0)
    return KlExpansion(top, nodes, weights, values, float(length), float(a_bar), float(sigma),
                       all_eigenvalues=evals)


def diffusion_eval(kl: KlExpansion, x, y) -> float:
    """Diffusion coefficient at one point ``x`` for one input vector ``y``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (kl.d,):
        raise ValueError(f"input vector must have length {kl.d}, got {y.shape}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} is outside [0, 1]")
    kl.require_positive()
    return float(kl.a_bar + kl.modes(np.array([x]))[0] @ y)


@dataclass(frozen=True)
class FemMesh:
    element_count: int

    def __post_init__(self):
        if self.element_count < 1:
            raise ConfigurationError("need at least one element")

    @property
    def h(self) -> float:
        return 1.0 / self.element_count

    @property
    def nodes(self) -> np.ndarray:
        """Vertices and midpoints, ``2 * element_count + 1`` points."""
        return np.linspace(0.0, 1.0, 2 * self.element_count + 1)

    @property
    def quadrature_points(self) -> np.ndarray:
        """Shape ``(element_count, 3)``."""
        left = np.arange(self.element_count) * self.h
        return left[:, None] + self.h * _GAUSS3_POINTS[None, :]


# reference quadratic shape functions on [0, 1] with nodes 0, 1/2, 1, at the Gauss points
_XI = _GAUSS3_POINTS
_SHAPE = np.stack([2 * (_XI - 0.5) * (_XI - 1), -4 * _XI * (_XI - 1), 2 * _XI * (_XI - 0.5)])
_DSHAPE = np.stack([4 * _XI - 3, 8 * (-_XI) + 4, 4 * _XI - 1])


def _solve_batch(a_q: np.ndarray, mesh: FemMesh, f_q: np.ndarray) -> np.ndarray:
    """Nodal solutions for coefficient samples ``a_q`` of shape (S, E, 3)."""
    if not np.all(a_q > 0):
        raise CoefficientPositivityError("diffusion coefficient is not positive at every quadrature point")
    h = mesh.h
    n_el = mesh.element_count
    # element stiffness K[s, e, i, j] = sum_q w_q a dN_i dN_j / h
    kel = np.einsum("seq,q,iq,jq->seij", a_q, _GAUSS3_WEIGHTS, _DSHAPE, _DSHAPE) / h
    fel = np.einsum("eq,q,iq->ei", f_q, _GAUSS3_WEIGHTS, _SHAPE) * h
    n_nodes = 2 * n_el + 1
    samples = a_q.shape[0]
    # upper banded storage: row 2 diagonal, row 1 first super-diagonal, row 0 second
    band = np.zeros((samples, 3, n_nodes))
    load = np.zeros(n_nodes)
    first = 2 * np.arange(n_el)
    for i in range(3):
        np.add.at(load, first + i, fel[:, i])
        for j in range(i, 3):
            np.add.at(band, (slice(None), 2 - (j - i), first + j), kel[:, :, i, j])
    interior = slice(1, n_nodes - 1)
    out = np.zeros((samples, n_nodes))
    for s in range(samples):
        ab = band[s, :, interior].copy()
        ab[0, :2] = 0.0
        ab[1, :1] = 0.0
        try:
            out[s, interior] = scipy.linalg.solveh_banded(ab, load[interior])
        except np.linalg.LinAlgError as exc:
            raise CoefficientPositivityError(f"stiffness matrix is not positive definite: {exc}") from None
    return out


def fem_solve(a_fn: Callable, element_count: int = 64, f: Callable | float = 1.0):
    """Galerkin solution of ``-(a u')' = f`` on (0, 1) with zero boundary values.

    ``a_fn`` must accept an array of points.  Returns ``(nodes, values)``.
    """
    mesh = FemMesh(element_count)
    xq = mesh.quadrature_points
    a_q = np.asarray(a_fn(xq), dtype=float) * np.ones_like(xq)
    f_q = np.asarray(f(xq) if callable(f) else f, dtype=float) * np.ones_like(xq)
    return mesh.nodes, _solve_batch(a_q[None], mesh, f_q)[0]


def _centre_index(element_count: int) -> int:
    if element_count % 2:
        raise ConfigurationError(f"element count must be even so x=0.5 is a node, got {element_count}")
    return element_count


def qoi_batch(kl: KlExpansion, element_count: int, y) -> np.ndarray:
    """``u(0.5)`` for every row of ``y`` (shape (S, d))."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[1] != kl.d:
        raise ValueError(f"inputs have {y.shape[1]} columns, expansion has d={kl.d}")
    if np.any(np.abs(y) > 1):
        raise DomainError("inputs must lie in [-1, 1]")
    centre = _centre_index(element_count)
    kl.require_positive()
    mesh = FemMesh(element_count)
    xq = mesh.quadrature_points
    modes = kl.modes(xq)  # (E, 3, d)
    a_q = kl.a_bar + np.einsum("eqi,si->seq", modes, y)
    return _solve_batch(a_q, mesh, np.ones_like(xq))[:, centre]


def qoi_sample(kl: KlExpansion, element_count: int, y) -> float:
    return float(qoi_batch(kl, element_count, np.asarray(y, dtype=float)[None, :])[0])


def generate_dataset(kl: KlExpansion, element_count: int, n: int, seed) -> Dataset:
    """``n`` uniform inputs from ``seed`` and the matching centre values."""
    if n < 1:
        raise ConfigurationError("need at least one sample")
    y = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n, kl.d))
    u = qoi_batch(kl, element_count, y)
    meta = {"generator": "elliptic1d", "L": kl.length, "a_bar": kl.a_bar, "sigma": kl.sigma,
            "element_count": element_count, "generator_version": GENERATOR_VERSION}
    return Dataset(y, u, seed=seed if isinstance(seed, (int, type(None))) else str(seed), metadata=meta)
