"""Dense linear algebra kernels and finite-difference derivatives.

Everything here works on small dense ``numpy`` arrays. LU factorization is
done in-house so the singularity threshold and the determinant sign are
under our control; the homotopy tracer relies on both.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .exceptions import RankDeficient, SingularMatrix

#: Relative pivot threshold: a pivot below ``PIVOT_RTOL * ||A||_inf`` is singular.
PIVOT_RTOL = 1e-14

_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


def as_vec(x, n: int | None = None) -> np.ndarray:
    """Return ``x`` as a finite 1-d float array, optionally checking its length."""
    v = np.array(x, dtype=float).reshape(-1)
    if n is not None and v.shape[0] != n:
        raise ValueError(f"expected a vector of length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def as_mat(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Return ``a`` as a finite 2-d float array with optional shape checks."""
    m = np.array(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim={m.ndim}")
    if rows is not None and m.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ValueError(f"expected {cols} columns, got {m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


class LUFactors(NamedTuple):
    lu: np.ndarray
    perm: np.ndarray
    parity: int
    singular: bool


def lu_factor(a: np.ndarray) -> LUFactors:
    """Gaussian elimination with partial pivoting.

    ``lu`` holds the unit-lower factor below the diagonal and the upper factor
    on and above it; ``perm`` maps rows of the factored matrix to rows of
    ``a``. Factoring stops early and sets ``singular`` when a pivot falls
    below ``PIVOT_RTOL * ||a||_inf``.
    """
    lu = as_mat(a).copy()
    n, m = lu.shape
    if n != m:
        raise ValueError(f"matrix must be square, got {n}x{m}")
    perm = np.arange(n)
    parity = 1
    tol = PIVOT_RTOL * float(np.max(np.sum(np.abs(lu), axis=1))) if n else 0.0
    for j in range(n):
        p = j + int(np.argmax(np.abs(lu[j:, j])))
        piv = lu[p, j]
        if abs(piv) <= tol or piv == 0.0:
            return LUFactors(lu, perm, parity, True)
        if p != j:
            lu[[j, p]] = lu[[p, j]]
            perm[[j, p]] = perm[[p, j]]
            parity = -parity
        lu[j + 1:, j] /= lu[j, j]
        lu[j + 1:, j + 1:] -= np.outer(lu[j + 1:, j], lu[j, j + 1:])
    return LUFactors(lu, perm, parity, False)


def _substitute(f: LUFactors, b: np.ndarray) -> np.ndarray:
    lu = f.lu
    n = lu.shape[0]
    y = b[f.perm].astype(float)
    for i in range(1, n):
        y[i] -= lu[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
    return y


def lu_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a x = b`` by partial-pivoting LU.

    Raises:
        SingularMatrix: if a pivot falls below the relative threshold.
    """
    f = lu_factor(a)
    if f.singular:
        raise SingularMatrix("matrix is singular to working precision")
    b = as_vec(b, f.lu.shape[0])
    return _substitute(f, b)


def _sign(f: LUFactors) -> int:
    diag = np.diag(f.lu)
    return f.parity * (1 if np.count_nonzero(diag < 0) % 2 == 0 else -1)


def solve_with_sign(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, int]:
    """``lu_solve`` that also returns ``sign(det a)`` from the same factors."""
    f = lu_factor(a)
    if f.singular:
        raise SingularMatrix("matrix is singular to working precision")
    return _substitute(f, as_vec(b, f.lu.shape[0])), _sign(f)


def sign_logdet(a: np.ndarray) -> tuple[int, float]:
    """Sign and natural log of ``|det a|``.

    A matrix that trips the pivot threshold reports ``(0, -inf)``.
    """
    f = lu_factor(a)
    if f.singular:
        return 0, -math.inf
    return _sign(f), float(np.sum(np.log(np.abs(np.diag(f.lu)))))


def pseudoinverse_apply(j: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution ``J^+ r`` for a full-row-rank ``J``.

    Uses the normal equations ``J^T (J J^T)^{-1} r``.
    """
    j = as_mat(j)
    r = as_vec(r, j.shape[0])
    try:
        y = lu_solve(j @ j.T, r)
    except SingularMatrix as exc:
        raise RankDeficient("J J^T is singular") from exc
    return j.T @ y


def equilibrate_rows(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each row of ``a`` (and entry of ``b``) by the row's inf-norm.

    The solution set of ``a x = b`` and the sign of ``det a`` are unchanged;
    the pivot threshold then sees rows of comparable size. Zero rows are left
    alone.
    """
    a = as_mat(a)
    b = as_vec(b, a.shape[0])
    s = np.max(np.abs(a), axis=1)
    s = np.where(s > 0.0, s, 1.0)
    return a / s[:, None], b / s


def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x``.

    Column ``j`` uses the step ``eps**(1/3) * max(1, |x_j|)``. Any exception
    raised by ``f`` (e.g. ``DomainError``) propagates.
    """
    x = as_vec(x)
    n = x.shape[0]
    cols = []
    for j in range(n):
        h = _FD_STEP * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        # actual step after rounding
        h2 = xp[j] - xm[j]
        cols.append((np.asarray(f(xp), dtype=float) - np.asarray(f(xm), dtype=float)) / h2)
    return np.column_stack(cols)
