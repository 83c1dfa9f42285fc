"""Monte-Carlo check of norm concentration for sign-randomized Legendre matrices."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..pce import assemble_matrix, build_basis

EPSILONS = (0.0, 0.1, 0.25, 0.5, 1.0)


@dataclass
class JlRow:
    N: int
    mean: float
    stderr: float
    exceedance: dict  # eps -> fraction of trials with |‖Φx‖² - 1| > eps (>= for eps = 0)


def jl_concentration_experiment(d: int, p: int, N_list, trial_count: int = 1000,
                                seed=0, epsilons=EPSILONS) -> list[JlRow]:
    """For each N, ``trial_count`` fresh draws of ``Phi = Psi diag(xi) / sqrt(N)``.

    ``xi`` is Rademacher and ``x`` a uniformly random unit vector; the
    statistic is ``||Phi x||^2``, whose expectation is 1.
    """
    if trial_count < 100:
        raise ConfigurationError(f"trial_count must be at least 100, got {trial_count}")
    basis = build_basis(d, p)
    rows = []
    for k, n in enumerate(N_list):
        n = int(n)
        if n < 1:
            raise ConfigurationError(f"sample counts must be positive, got {n}")
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))
        stats = np.empty(trial_count)
        for t in range(trial_count):
            psi = assemble_matrix(basis, rng.uniform(-1.0, 1.0, size=(n, d)))
            xi = rng.choice([-1.0, 1.0], size=basis.size)
            x = rng.standard_normal(basis.size)
            x /= np.linalg.norm(x)
            stats[t] = np.sum((psi @ (xi * x)) ** 2) / n
        dev = np.abs(stats - 1.0)
        exceed = {float(e): float(np.mean(dev >= e) if e == 0 else np.mean(dev > e)) for e in epsilons}
        rows.append(JlRow(n, float(stats.mean()), float(stats.std(ddof=1) / np.sqrt(trial_count)),
                          exceed))
    return rows


def write_jl_csv(rows: list[JlRow], path) -> None:
    eps = sorted(rows[0].exceedance) if rows else list(EPSILONS)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "mean", "stderr"] + [f"exceed_{e:g}" for e in eps])
        for r in rows:
            writer.writerow([r.N, repr(r.mean), repr(r.stderr)] + [repr(r.exceedance[e]) for e in eps])
