"""Exponential/algebraic decay generative model for PC coefficient magnitudes.

The latent vector is ``z = (logC, g_1..g_d, h_1..h_d)`` and the magnitude of the
coefficient attached to multi-index ``alpha`` is

    G(z) = exp(logC) * |alpha|!/alpha! * prod_j (1 + alpha_j)**h_j * exp(-g_j alpha_j)

Everything is evaluated in log space: ``log G = log_mult + B @ z`` with the fixed
design ``B = [1, -alpha, log(1 + alpha)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateInputError
from .pce import MultiIndexBasis

__all__ = [
    "DecayModel",
    "GenModelState",
    "gen_eval",
    "gen_jacobian",
    "latent_size",
    "loss",
    "loss_grad_z",
    "rel_loss_change",
    "weight_matrix",
    "lipschitz_shape",
    "lipschitz_constant",
    "DEFAULT_WEIGHT_EPS",
]

DEFAULT_WEIGHT_EPS = 1e-4


def latent_size(d: int) -> int:
    return 2 * d + 1


@dataclass(frozen=True)
class GenModelState:
    """Latent vector ``z``, sign vector ``zeta`` and sparse deviation ``nu``."""

    z: np.ndarray
    zeta: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        zeta = np.array(self.zeta, dtype=float)
        nu = np.array(self.nu, dtype=float)
        if not np.all(np.abs(zeta) == 1.0):
            raise ValueError("zeta entries must be exactly +1 or -1")
        if zeta.shape != nu.shape:
            raise ValueError(f"zeta {zeta.shape} and nu {nu.shape} lengths differ")
        for name, arr in (("z", z), ("zeta", zeta), ("nu", nu)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def with_(self, **changes) -> "GenModelState":
        return replace(self, **changes)


class DecayModel:
    """Precomputed generative model for one basis.

    Holds the log-multinomial offsets and the latent design matrix so that
    repeated evaluations inside an optimizer loop are a single mat-vec.
    """

    def __init__(self, basis: MultiIndexBasis):
        self.basis = basis
        alpha = basis.indices.astype(float)
        self.design = np.hstack(
            [np.ones((basis.size, 1)), -alpha, np.log1p(alpha)]
        )
        self.design.setflags(write=False)
        self.log_mult = basis.log_multinomial

    @property
    def d(self) -> int:
        return self.basis.d

    def _check(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (latent_size(self.d),):
            raise ValueError(f"latent vector must have length {latent_size(self.d)}, got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("latent vector has non-finite entries")
        return z

    def log_magnitudes(self, z) -> np.ndarray:
        return self.log_mult + self.design @ self._check(z)

    def magnitudes(self, z) -> np.ndarray:
        return np.exp(self.log_magnitudes(z))

    def jacobian(self, z) -> np.ndarray:
        return self.magnitudes(z)[:, None] * self.design

    def coefficients(self, state: GenModelState) -> np.ndarray:
        return state.zeta * self.magnitudes(state.z) + state.nu

    def residual(self, state: GenModelState, psi, u) -> np.ndarray:
        psi = np.asarray(psi, dtype=float)
        u = np.asarray(u, dtype=float)
        if psi.shape != (u.size, self.basis.size):
            raise ValueError(
                f"matrix {psi.shape} inconsistent with {u.size} observations and P={self.basis.size}"
            )
        return psi @ self.coefficients(state) - u

    def loss(self, state: GenModelState, psi, u) -> float:
        r = self.residual(state, psi, u)
        return float(r @ r)

    def loss_grad(self, state: GenModelState, psi, u) -> np.ndarray:
        # 2 (Psi D_zeta J)^T r = 2 B^T (G * zeta * Psi^T r)
        g = self.magnitudes(state.z)
        r = psi @ (state.zeta * g + state.nu) - u
        return 2.0 * self.design.T @ (g * state.zeta * (psi.T @ r))

    def weights(self, z, eps: float = DEFAULT_WEIGHT_EPS, reference: str = "constant") -> np.ndarray:
        """Diagonal of the deviation weight matrix.

        ``reference="constant"`` scales ``eps`` by the magnitude of the constant
        term, ``exp(logC)``; ``reference="absolute"`` uses ``eps`` as is.
        """
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        g = self.magnitudes(z)
        if reference == "constant":
            floor = eps * np.exp(z[0])
        elif reference == "absolute":
            floor = eps
        else:
            raise ValueError(f"unknown weight reference {reference!r}")
        return 1.0 / (g + floor)


def gen_eval(z, basis: MultiIndexBasis) -> np.ndarray:
    """Coefficient magnitudes predicted by the generative model."""
    return DecayModel(basis).magnitudes(z)


def gen_jacobian(z, basis: MultiIndexBasis) -> np.ndarray:
    """Jacobian of :func:`gen_eval` with respect to ``z``, shape ``(P, 2d+1)``."""
    return DecayModel(basis).jacobian(z)


def loss(state: GenModelState, psi, u, basis: MultiIndexBasis) -> float:
    """Squared residual ``||Psi (zeta*G(z) + nu) - u||^2``."""
    return DecayModel(basis).loss(state, psi, u)


def loss_grad_z(state: GenModelState, psi, u, basis: MultiIndexBasis) -> np.ndarray:
    """Gradient of :func:`loss` with respect to the latent vector."""
    model = DecayModel(basis)
    model.residual(state, psi, u)  # shape validation
    return model.loss_grad(state, np.asarray(psi, float), np.asarray(u, float))


def rel_loss_change(z1, z2, nu, zeta, psi, u, basis: MultiIndexBasis) -> float:
    """Relative loss change ``(L(z1) - L(z2)) / L(z2)`` at fixed ``nu`` and ``zeta``.

    Raises
    ------
    DegenerateInputError
        If ``L(z2) == 0``; the caller should treat this as convergence.
    """
    model = DecayModel(basis)
    l1 = model.loss(GenModelState(z1, zeta, nu), psi, u)
    l2 = model.loss(GenModelState(z2, zeta, nu), psi, u)
    if l2 == 0.0:
        raise DegenerateInputError("reference loss is zero; the fit is already exact")
    return (l1 - l2) / l2


def weight_matrix(z, basis: MultiIndexBasis, eps: float = DEFAULT_WEIGHT_EPS,
                  reference: str = "constant") -> np.ndarray:
    """Diagonal ``W_jj = 1 / (G_j(z) + eps * G_ref(z))`` as a length-P vector."""
    return DecayModel(basis).weights(z, eps, reference)


def lipschitz_shape(b) -> np.ndarray:
    """Shape factor: 1 for ``b >= 2`` and ``(4/b^2) exp(b-2)`` for ``0 < b < 2``.

    Returns 0 where ``b == 0`` (those entries do not contribute).
    """
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ValueError("b must be non-negative")
    out = np.ones_like(b)
    small = b < 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[small] = 4.0 / b[small] ** 2 * np.exp(b[small] - 2.0)
    out[b == 0] = 0.0
    return out


def lipschitz_exponents(basis: MultiIndexBasis) -> np.ndarray:
    """Non-negative exponent vectors ``b_i = (1, alpha_i, log(1+alpha_i))``.

    With these, ``G_i = c_i exp(-b_i . w)`` where ``w = (-logC, g, -h)`` and
    ``c_i`` is the multinomial ratio.
    """
    alpha = basis.indices.astype(float)
    return np.hstack([np.ones((basis.size, 1)), alpha, np.log1p(alpha)])


def lipschitz_constant(basis: MultiIndexBasis, z0, c_scale) -> float:
    """Lipschitz constant of ``a -> G(z(a))`` on ``[0, 1)^k``.

    Here ``z_j(a) = a_j / (1 - a_j) + z0_j`` in the exponent convention of
    :func:`lipschitz_exponents` and ``G_i = c_i exp(-b_i . z)``.

    Parameters
    ----------
    basis : MultiIndexBasis
    z0 : (2d+1,) array_like
        Lower corner of the latent domain.
    c_scale : float or (P,) array_like
        Positive per-index prefactors ``c_i``.
    """
    b = lipschitz_exponents(basis)
    k = b.shape[1]
    z0 = np.broadcast_to(np.asarray(z0, dtype=float), (k,))
    c = np.broadcast_to(np.asarray(c_scale, dtype=float), (basis.size,))
    if np.any(c <= 0):
        raise ValueError("c_scale entries must be positive")
    per_entry = np.abs(c)[:, None] * b * np.exp(-(b @ z0))[:, None] * lipschitz_shape(b)
    return float(np.sqrt(basis.size * k) * per_entry.max())
