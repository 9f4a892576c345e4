"""Brute-force reference solvers for small instances.

These never take part in solving; they exist to check the tracers.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .exceptions import NoCandidate
from .numerics import as_vec
from .problems import LcpData
from .reformulate import NcpProblem, check_ncp_residual

ENUM_MAX_N = 12
ENUM_TOL = 1e-9
GRID_MAX_N = 3
GRID_POINTS = 50
GRID_ROUNDS = 5
GRID_ACCEPT = 1e-2


def lcp_enumerate(data: LcpData, tol: float = ENUM_TOL) -> list[np.ndarray]:
    """All solutions of the LCP found by trying each complementary index set.

    For every ``alpha`` the system ``(M z + q)_alpha = 0, z_rest = 0`` is
    solved with numpy's LAPACK solver and kept if ``z >= -tol`` and
    ``M z + q >= -tol``. Duplicates (within ``tol``) are merged and the
    result is sorted lexicographically.
    """
    n = data.n
    if n > ENUM_MAX_N:
        raise ValueError(f"enumeration is limited to n <= {ENUM_MAX_N}")
    M, q = data.M, data.q
    found: list[np.ndarray] = []
    for mask in product((False, True), repeat=n):
        alpha = np.flatnonzero(mask)
        z = np.zeros(n)
        if alpha.size:
            try:
                z[alpha] = np.linalg.solve(M[np.ix_(alpha, alpha)], -q[alpha])
            except np.linalg.LinAlgError:
                continue
        w = M @ z + q
        if np.all(z >= -tol) and np.all(w >= -tol):
            if not any(np.max(np.abs(z - s)) <= tol for s in found):
                found.append(z)
    return sorted(found, key=tuple)


def _grid_best(problem: NcpProblem, lo: np.ndarray, hi: np.ndarray, points: int):
    axes = [np.linspace(a, b, points) for a, b in zip(lo, hi)]
    best_x, best_r = None, np.inf
    for cell in product(*axes):
        x = np.array(cell)
        if not problem.in_domain(x):
            continue
        r, _ = check_ncp_residual(problem, x)
        if r < best_r:
            best_x, best_r = x, r
    return best_x, best_r


def residual_grid_refine(problem: NcpProblem, box_lo, box_hi,
                         points: int = GRID_POINTS, rounds: int = GRID_ROUNDS) -> np.ndarray:
    """Minimize ``||min(x, f(x))||_inf`` over a grid, then zoom in.

    The first pass uses ``points`` per axis over the box; each of ``rounds``
    refinements re-grids a window of two cells around the incumbent at ten
    times the resolution, clipped to the box.

    Raises:
        NoCandidate: the best residual found exceeds 1e-2.
    """
    n = problem.n
    if n > GRID_MAX_N:
        raise ValueError(f"grid oracle is limited to n <= {GRID_MAX_N}")
    lo = as_vec(box_lo, n)
    hi = as_vec(box_hi, n)
    if np.any(hi <= lo):
        raise ValueError("box must have box_hi > box_lo")
    x, r = _grid_best(problem, lo, hi, points)
    cell = (hi - lo) / (points - 1)
    for _ in range(rounds):
        if x is None:
            break
        w_lo = np.maximum(lo, x - 2.0 * cell)
        w_hi = np.minimum(hi, x + 2.0 * cell)
        # four cells wide at ten times the resolution
        xr, rr = _grid_best(problem, w_lo, w_hi, 41)
        if rr <= r:
            x, r = xr, rr
        cell = cell / 10.0
    if x is None or r > GRID_ACCEPT:
        raise NoCandidate(f"best grid residual {r:.3g} exceeds {GRID_ACCEPT}")
    return x
