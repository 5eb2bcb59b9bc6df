"""Dense Gaussian elimination with partial pivoting.

Small shared kernel for the traffic equations and for steady-state solves.
Systems here are tiny (tens of unknowns), so a direct O(n^3) elimination with
an explicit pivot-size check beats pulling in a heavier solver: when a pivot
collapses we want to say *why* (singular routing, reducible chain), not get
back a vector of NaNs.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularMatrixError

PIVOT_TOL = 1e-12


def solve_dense(a: np.ndarray, b: np.ndarray, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    """Solve ``a @ x = b`` for square ``a``.

    Args:
        a: coefficient matrix, shape (n, n).  Not modified.
        b: right-hand side, shape (n,).  Not modified.
        pivot_tol: a pivot with absolute value below this aborts the
            elimination.

    Returns:
        Solution vector x, shape (n,).

    Raises:
        SingularMatrixError: if the largest available pivot in some column
            falls below ``pivot_tol``.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"shape mismatch: a {a.shape}, b {b.shape}")

    for k in range(n - 1):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) < pivot_tol:
            raise SingularMatrixError(abs(a[p, k]), k)
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        m = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(m, a[k, k:])
        b[k + 1:] -= m * b[k]

    if abs(a[n - 1, n - 1]) < pivot_tol:
        raise SingularMatrixError(abs(a[n - 1, n - 1]), n - 1)

    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x
