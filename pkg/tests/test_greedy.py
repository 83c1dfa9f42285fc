import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genmod.errors import ConfigurationError, NumericalDegeneracyError
from genmod.pce import assemble_matrix, build_basis
from genmod.solvers import kfold_indices, omp, omp_cv
from genmod.solvers.folds import complement
from genmod.solvers.greedy import default_max_atoms


def naive_omp(psi, u, k):
    """Textbook OMP: normalized correlation pick, lstsq refit each step."""
    norms = np.linalg.norm(psi, axis=0)
    support, coef = [], np.zeros(0)
    r = u.copy()
    for _ in range(k):
        if np.linalg.norm(r) <= 1e-14 * np.linalg.norm(u):
            break
        score = np.abs(psi.T @ r) / norms
        score[support] = -1
        support.append(int(np.argmax(score)))
        coef = np.linalg.lstsq(psi[:, support], u, rcond=None)[0]
        r = u - psi[:, support] @ coef
    full = np.zeros(psi.shape[1])
    full[support] = coef
    return support, full


def legendre_columns(n, seed, d=20, p=2, cols=200):
    rng = np.random.default_rng(seed)
    return assemble_matrix(build_basis(d, p), rng.uniform(-1, 1, (n, d)))[:, :cols], rng


def test_single_scaled_column(rng):
    psi = rng.normal(size=(20, 12))
    res = omp(psi, 3 * psi[:, 7], 1)
    assert list(res.support) == [7]
    assert res.coefficients[7] == pytest.approx(3.0, abs=1e-12)
    assert res.residual_norm < 1e-12


def test_full_atom_count_interpolates(rng):
    psi = rng.normal(size=(15, 40))
    u = rng.normal(size=15)
    res = omp(psi, u, 15)
    assert res.residual_norm < 1e-10 * np.linalg.norm(u)


@pytest.mark.parametrize("seed", range(10))
def test_planted_five_sparse_recovery(seed):
    psi, rng = legendre_columns(40, seed)
    truth = np.zeros(200)
    where = rng.choice(200, 5, replace=False)
    truth[where] = rng.normal(size=5)
    res = omp(psi, psi @ truth, 5)
    assert set(res.support) == set(where)
    np.testing.assert_allclose(res.coefficients, truth, atol=1e-10)


@given(st.integers(0, 2**31 - 1), st.integers(1, 12))
def test_matches_textbook_omp_and_residual_properties(seed, k):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=(25, 60))
    u = rng.normal(size=25)
    res = omp(psi, u, k)
    support, coef = naive_omp(psi, u, k)
    assert list(res.support) == support
    np.testing.assert_allclose(res.coefficients, coef, atol=1e-10)
    r = u - psi @ res.coefficients
    assert np.max(np.abs(psi[:, res.support].T @ r)) < 1e-10 * max(1.0, np.linalg.norm(u))
    # strictly shrinking residual with each added atom
    norms = [omp(psi, u, j).residual_norm for j in range(1, k + 1)]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_dependent_column_is_degenerate(rng):
    psi = rng.normal(size=(10, 3))
    psi = np.column_stack([psi, psi[:, 0] + psi[:, 1]])
    u = psi @ np.array([1.0, -2.0, 0.5, 0.0]) + rng.normal(size=10)
    # four atoms force the dependent column in
    with pytest.raises(NumericalDegeneracyError):
        omp(psi, u, 4)


def test_atom_count_bounds(rng):
    psi = rng.normal(size=(5, 8))
    with pytest.raises(ConfigurationError):
        omp(psi, rng.normal(size=5), 6)
    with pytest.raises(ConfigurationError):
        omp(psi, rng.normal(size=5), 0)


def test_default_atom_ceiling():
    assert default_max_atoms(40, 680, 5) == 32
    assert default_max_atoms(1000, 680, 5) == 316
    assert default_max_atoms(40, 10, 5) == 10


@pytest.mark.parametrize("seed", range(5))
def test_cv_chooses_planted_count(seed):
    psi, rng = legendre_columns(50, seed, cols=120)
    truth = np.zeros(120)
    where = rng.choice(120, 3, replace=False)
    truth[where] = rng.choice([-1, 1], 3) * rng.uniform(0.5, 2, 3)
    res = omp_cv(psi, psi @ truth, fold_seed=seed)
    assert len(res.support) == 3
    np.testing.assert_allclose(res.coefficients, truth, atol=1e-10)


def test_cv_on_pure_noise_selects_few_atoms():
    counts = []
    for seed in range(50):
        psi, rng = legendre_columns(40, seed, d=5, p=3, cols=56)
        counts.append(len(omp_cv(psi, rng.normal(size=40), fold_seed=seed).support))
    assert np.mean(counts) <= 2


def brute_force_loo(psi, u):
    n = psi.shape[0]
    cap = min(n - 1, psi.shape[1])
    errs = np.zeros(cap)
    for i in range(n):
        keep = np.delete(np.arange(n), i)
        for k in range(1, cap + 1):
            _, c = naive_omp(psi[keep], u[keep], k)
            errs[k - 1] += (psi[i] @ c - u[i]) ** 2
    best = int(np.argmin(errs / n)) + 1
    return naive_omp(psi, u, best)[1]


@pytest.mark.parametrize("seed", range(6))
def test_leave_one_out_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=(8, 6))
    u = psi[:, :2] @ np.array([1.0, -0.7]) + 0.2 * rng.normal(size=8)
    res = omp_cv(psi, u, folds=8, fold_seed=seed, max_atoms=7)
    np.testing.assert_allclose(res.coefficients, brute_force_loo(psi, u), atol=1e-10)


def test_cv_is_deterministic(rng):
    psi = rng.normal(size=(30, 50))
    u = rng.normal(size=30)
    a, b = omp_cv(psi, u, fold_seed=3), omp_cv(psi, u, fold_seed=3)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)


@given(st.integers(5, 200), st.integers(2, 10), st.integers(0, 1000))
def test_fold_partition(n, folds, seed):
    if n < folds:
        with pytest.raises(ConfigurationError):
            kfold_indices(n, folds, seed)
        return
    parts = kfold_indices(n, folds, seed)
    assert len(parts) == folds and all(len(p) >= 1 for p in parts)
    np.testing.assert_array_equal(np.sort(np.concatenate(parts)), np.arange(n))
    assert max(map(len, parts)) - min(map(len, parts)) <= 1
    np.testing.assert_array_equal(np.sort(np.concatenate([parts[0], complement(n, parts[0])])),
                                  np.arange(n))
    again = kfold_indices(n, folds, seed)
    assert all(np.array_equal(a, b) for a, b in zip(parts, again))
