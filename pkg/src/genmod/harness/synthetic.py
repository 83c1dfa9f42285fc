"""Synthetic data whose coefficients follow the decay model plus a few deviations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset
from ..model import DecayModel, GenModelState
from ..pce import assemble_matrix, build_basis


@dataclass(frozen=True)
class SpikeSpec:
    """``count`` deviations on uniformly chosen coefficients, with random signs.

    Magnitudes are uniform in ``[low, high]``.  With ``relative`` they are
    multiples of the model magnitude at the chosen coefficient (so a multiple
    above 1 against the coefficient's sign flips it); otherwise they are
    absolute values.
    """

    count: int = 5
    low: float = 1.0
    high: float = 3.0
    relative: bool = True


def random_latent(d: int, rng, decay_range=(2.0, 4.0), algebraic_range=(0.0, 1.0)) -> np.ndarray:
    """``(0, g, h)`` with decay rates and algebraic exponents drawn uniformly."""
    return np.concatenate([[0.0], rng.uniform(*decay_range, d), rng.uniform(*algebraic_range, d)])


def planted_coefficients(d: int, p: int, z_star, zeta_star, spikes: SpikeSpec, rng) -> np.ndarray:
    basis = build_basis(d, p)
    model = DecayModel(basis)
    nu = np.zeros(basis.size)
    if spikes.count:
        where = rng.choice(basis.size, size=spikes.count, replace=False)
        mags = rng.uniform(spikes.low, spikes.high, size=spikes.count)
        if spikes.relative:
            mags = mags * model.magnitudes(z_star)[where]
        nu[where] = mags * rng.choice([-1.0, 1.0], size=spikes.count)
    return model.coefficients(GenModelState(z_star, zeta_star, nu))


def synthetic_planted_dataset(d: int, p: int, z_star, zeta_star, nu_spec: SpikeSpec,
                              n: int, noise_level: float = 0.0, seed=0):
    """Returns ``(dataset, c_star)`` with ``u = Psi c_star + noise_level * N(0, 1)``."""
    coef_stream, y_stream, noise_stream = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
    )
    c_star = planted_coefficients(d, p, z_star, zeta_star, nu_spec, coef_stream)
    y = y_stream.uniform(-1.0, 1.0, size=(n, d))
    u = assemble_matrix(build_basis(d, p), y) @ c_star
    if noise_level:
        u = u + noise_level * noise_stream.standard_normal(n)
    meta = {"generator": "synthetic", "p": p}
    return Dataset(y, u, seed=seed, noise_level=noise_level, metadata=meta), c_star
