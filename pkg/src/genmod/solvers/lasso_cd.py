"""Coordinate-descent Lasso and cross-validation with the one-standard-error rule.

Objective convention throughout::

    (1 / (2N)) ||Phi w - u||_2^2 + lam ||w||_1

so the smallest penalty giving ``w = 0`` is ``||Phi^T u||_inf / N``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numba import njit

from ..errors import ConvergenceError, DegenerateInputError
from .folds import complement, kfold_indices

__all__ = [
    "LassoPathResult",
    "lasso",
    "lasso_path",
    "lambda_max",
    "lambda_grid",
    "lasso_cv_stderr",
    "kkt_violation",
    "soft_threshold",
]

DEFAULT_TOL = 1e-9
DEFAULT_MAX_SWEEPS = 200_000


def soft_threshold(x, thresh):
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


@njit(cache=True)
def _sweep(X, r, w, lam, col_scale, inv_n, coords):
    biggest = 0.0
    n = X.shape[0]
    for j in coords:
        s = col_scale[j]
        if s == 0.0:
            continue
        wj = w[j]
        dot = 0.0
        for i in range(n):
            dot += X[i, j] * r[i]
        rho = dot * inv_n + s * wj
        if rho > lam:
            new = (rho - lam) / s
        elif rho < -lam:
            new = (rho + lam) / s
        else:
            new = 0.0
        delta = new - wj
        if delta != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * delta
            w[j] = new
            change = abs(delta) * s
            if change > biggest:
                biggest = change
    return biggest


@njit(cache=True)
def _kkt(X, y, w, lam, inv_n, r):
    n, p = X.shape
    for i in range(n):
        acc = y[i]
        for j in range(p):
            if w[j] != 0.0:
                acc -= X[i, j] * w[j]
        r[i] = acc
    worst = 0.0
    for j in range(p):
        dot = 0.0
        for i in range(n):
            dot += X[i, j] * r[i]
        grad = dot * inv_n
        if w[j] == 0.0:
            v = abs(grad) - lam
        elif w[j] > 0.0:
            v = abs(grad - lam)
        else:
            v = abs(grad + lam)
        if v > worst:
            worst = v
    return worst


@njit(cache=True)
def _cd(X, y, lam, w, col_scale, tol, max_sweeps):
    n, p = X.shape
    inv_n = 1.0 / n
    r = np.empty(n)
    all_coords = np.arange(p)
    violation = _kkt(X, y, w, lam, inv_n, r)
    sweeps = 0
    while violation > tol and sweeps < max_sweeps:
        _sweep(X, r, w, lam, col_scale, inv_n, all_coords)
        sweeps += 1
        active = np.flatnonzero(w != 0.0)
        # polish the active set before paying for another full pass
        while active.size > 0 and sweeps < max_sweeps:
            change = _sweep(X, r, w, lam, col_scale, inv_n, active)
            sweeps += 1
            if change <= 0.1 * tol:
                break
        violation = _kkt(X, y, w, lam, inv_n, r)
    return sweeps, violation


def _prepare(phi, u):
    phi = np.asarray(phi, dtype=float)
    u = np.asarray(u, dtype=float)
    if phi.ndim != 2 or u.shape != (phi.shape[0],):
        raise ValueError(f"matrix {phi.shape} and vector {u.shape} are inconsistent")
    X = np.ascontiguousarray(phi)
    col_scale = (X * X).sum(axis=0) / X.shape[0]
    return X, u, col_scale


def _reduce_support(X, w):
    # Step along null directions of the support columns: the fit is unchanged,
    # the l1 norm does not grow, and one coordinate is zeroed per step.
    while True:
        support = np.flatnonzero(w)
        if support.size == 0:
            return support
        XA = X[:, support]
        if support.size <= X.shape[0]:
            diag = np.abs(np.diag(np.linalg.qr(XA, mode="r")))
            if diag.min() > 1e-10 * diag.max():
                return support
        _, sv, vt = np.linalg.svd(XA)
        rank = int(np.count_nonzero(sv > 1e-10 * sv[0]))
        if rank == support.size:
            return support
        direction = vt[rank]
        current = w[support]
        if np.sign(current) @ direction > 0:
            direction = -direction
        opposing = current * direction < 0
        t = -current[opposing] / direction[opposing]
        w[support] = current + t.min() * direction
        w[support[np.flatnonzero(opposing)[np.argmin(t)]]] = 0.0


def _newton_step(X, y, lam, w):
    """Exact minimizer on the current support and sign pattern.

    If the minimizer changes a sign, stop at the first zero crossing instead;
    the objective decreases along that segment either way.
    """
    n = X.shape[0]
    out = w.copy()
    support = _reduce_support(X, out)
    if support.size == 0:
        return out
    XA = X[:, support]
    signs = np.sign(out[support])
    # stationarity on the support: XA^T (y - XA w) = n lam s, solved through
    # XA = QR so the conditioning is that of XA rather than its Gram matrix
    q, r = np.linalg.qr(XA)
    shift = scipy.linalg.solve_triangular(r, n * lam * signs, trans="T")
    target = scipy.linalg.solve_triangular(r, q.T @ y - shift)
    if not np.all(np.isfinite(target)):
        return None
    current = out[support]
    crossing = np.sign(target) != signs
    if np.any(crossing):
        t = current[crossing] / (current[crossing] - target[crossing])
        out[support] = current + t.min() * (target - current)
        out[support[np.flatnonzero(crossing)[np.argmin(t)]]] = 0.0
    else:
        out[support] = target
    return out


def _solve(X, y, lam, w, col_scale, tol, max_sweeps, chunk=50):
    # coordinate descent in chunks; between chunks try an exact active-set step,
    # which fixes the slow tail when the support is nearly square
    inv_n = 1.0 / X.shape[0]
    r = np.empty(X.shape[0])
    violation = _kkt(X, y, w, lam, inv_n, r)
    sweeps = 0
    while violation > tol and sweeps < max_sweeps:
        used, violation = _cd(X, y, lam, w, col_scale, tol, min(chunk, max_sweeps - sweeps))
        sweeps += used
        if violation <= tol:
            break
        candidate = _newton_step(X, y, lam, w)
        improved = False
        if candidate is not None:
            cand_violation = _kkt(X, y, candidate, lam, inv_n, r)
            if cand_violation < violation:
                w[:] = candidate
                violation = cand_violation
                improved = True
        chunk = 50 if improved else min(2 * chunk, 2000)
    return sweeps, violation


def kkt_violation(phi, u, w, lam) -> float:
    """Largest violation of the Lasso optimality conditions at ``w``."""
    X, u, _ = _prepare(phi, u)
    w = np.asarray(w, dtype=float)
    return float(_kkt(X, u, w, float(lam), 1.0 / X.shape[0], np.empty(X.shape[0])))


def lasso(phi, u, lam: float, tol: float = DEFAULT_TOL,
          max_sweeps: int = DEFAULT_MAX_SWEEPS, w0=None) -> np.ndarray:
    """Solve the Lasso by cyclic coordinate descent.

    The returned ``w`` satisfies the KKT conditions to within ``tol``:
    ``|phi_j^T r| / N <= lam + tol`` where ``w_j = 0`` and
    ``|phi_j^T r / N - lam sign(w_j)| <= tol`` elsewhere.

    Raises
    ------
    ConvergenceError
        If the conditions are not met after ``max_sweeps`` coordinate sweeps.
    """
    if lam < 0:
        raise ValueError(f"penalty must be non-negative, got {lam}")
    X, u, col_scale = _prepare(phi, u)
    w = np.zeros(X.shape[1]) if w0 is None else np.array(w0, dtype=float)
    sweeps, violation = _solve(X, u, float(lam), w, col_scale, float(tol), int(max_sweeps))
    if violation > tol:
        raise ConvergenceError(
            f"Lasso did not converge in {sweeps} sweeps (KKT violation {violation:.3e})",
            sweeps=sweeps, violation=violation, lam=lam,
        )
    return w


def lasso_path(phi, u, lambdas, tol: float = DEFAULT_TOL,
               max_sweeps: int = DEFAULT_MAX_SWEEPS) -> np.ndarray:
    """Warm-started solutions along ``lambdas``; returns shape ``(len(lambdas), P)``."""
    X, u, col_scale = _prepare(phi, u)
    lambdas = np.asarray(lambdas, dtype=float)
    out = np.empty((lambdas.size, X.shape[1]))
    w = np.zeros(X.shape[1])
    for k, lam in enumerate(lambdas):
        sweeps, violation = _solve(X, u, float(lam), w, col_scale, float(tol), int(max_sweeps))
        if violation > tol:
            raise ConvergenceError(
                f"Lasso path stalled at lambda={lam:.3e} (KKT violation {violation:.3e})",
                sweeps=sweeps, violation=violation, lam=lam,
            )
        out[k] = w
    return out


def lambda_max(phi, u) -> float:
    phi = np.asarray(phi, dtype=float)
    u = np.asarray(u, dtype=float)
    return float(np.max(np.abs(phi.T @ u)) / phi.shape[0])


def lambda_grid(phi, u, count: int = 100, ratio: float = 1e-3) -> np.ndarray:
    """Geometric grid from ``lambda_max`` down to ``ratio * lambda_max``."""
    if count < 1:
        raise ValueError("count must be positive")
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    top = lambda_max(phi, u)
    if top == 0.0:
        raise DegenerateInputError("target is zero (or orthogonal to every column)")
    return top * np.geomspace(1.0, ratio, count)


@dataclass
class LassoPathResult:
    lambda_grid: np.ndarray
    cv_mean_error: np.ndarray
    cv_stderr: np.ndarray
    fold_errors: np.ndarray
    min_index: int
    chosen_index: int
    chosen_lambda: float
    solution: np.ndarray


def lasso_cv_stderr(phi, u, lambdas=None, folds: int = 5, fold_seed=0,
                    tol: float = DEFAULT_TOL, count: int = 100,
                    ratio: float = 1e-3, path_rtol: float = 1e-4) -> LassoPathResult:
    """k-fold cross-validated Lasso with the one-standard-error rule.

    Hold-out errors are squared residual norms on each fold.  With ``L`` the
    grid index of the smallest mean error, the standard error is
    ``std(fold errors at L) / sqrt(N)`` (population std, total sample count N)
    and the chosen penalty is the largest grid value whose mean error is below
    ``e_L + s_L``.  The final solution is refit on all rows to within ``tol``;
    the per-fold paths only feed hold-out errors and are solved to
    ``path_rtol * max(lambdas)``.
    """
    phi = np.asarray(phi, dtype=float)
    u = np.asarray(u, dtype=float)
    n = phi.shape[0]
    if lambdas is None:
        lambdas = lambda_grid(phi, u, count, ratio)
    lambdas = np.asarray(lambdas, dtype=float)
    parts = kfold_indices(n, folds, fold_seed)
    fold_tol = max(tol, path_rtol * float(lambdas.max()))

    errors = np.empty((lambdas.size, folds))
    for j, held in enumerate(parts):
        train = complement(n, held)
        path = lasso_path(phi[train], u[train], lambdas, tol=fold_tol)
        resid = phi[held] @ path.T - u[held][:, None]
        errors[:, j] = (resid * resid).sum(axis=0)

    mean = errors.mean(axis=1)
    stderr = errors.std(axis=1) / np.sqrt(n)
    best = int(np.argmin(mean))
    ok = mean < mean[best] + stderr[best]
    ok[best] = True  # zero spread would otherwise exclude the minimizer itself
    candidates = np.flatnonzero(ok)
    chosen = int(candidates[np.argmax(lambdas[candidates])])
    if np.all(np.diff(lambdas) <= 0):
        final = lasso_path(phi, u, lambdas[: chosen + 1], tol=tol)[-1]
    else:
        final = lasso(phi, u, lambdas[chosen], tol=tol)
    return LassoPathResult(
        lambda_grid=lambdas,
        cv_mean_error=mean,
        cv_stderr=stderr,
        fold_errors=errors,
        min_index=best,
        chosen_index=chosen,
        chosen_lambda=float(lambdas[chosen]),
        solution=final,
    )
