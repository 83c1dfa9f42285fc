"""Dense least squares through a column-pivoted QR factorization."""

import numpy as np
import scipy.linalg

from ..errors import NumericalDegeneracyError

_RANK_TOL = 1e-12


def least_squares(psi, u) -> np.ndarray:
    """Minimize ``||psi c - u||_2`` for a tall, full-column-rank ``psi``.

    Raises
    ------
    NumericalDegeneracyError
        If ``psi`` is numerically rank deficient; ``pivot`` names the first
        column the pivoted factorization could not resolve.
    """
    psi = np.asarray(psi, dtype=float)
    u = np.asarray(u, dtype=float)
    n, p = psi.shape
    if u.shape != (n,):
        raise ValueError(f"matrix {psi.shape} and vector {u.shape} are inconsistent")
    if n < p:
        raise NumericalDegeneracyError(f"{n} rows cannot determine {p} coefficients", pivot=n)
    q, r, perm = scipy.linalg.qr(psi, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    small = np.flatnonzero(diag <= _RANK_TOL * max(n, p) * diag[0]) if p else []
    if len(small):
        col = int(perm[small[0]])
        raise NumericalDegeneracyError(
            f"matrix is rank deficient; column {col} is numerically dependent", pivot=col
        )
    c = np.empty(p)
    c[perm] = scipy.linalg.solve_triangular(r, q.T @ u)
    return c
