"""Shared end-of-path pieces: the NCP acceptance test and the Newton polish
at ``lambda = 0``."""

from __future__ import annotations

import math

import numpy as np

from ..exceptions import SingularMatrix
from ..homotopy import HomotopyInstance
from ..numerics import equilibrate_rows, lu_solve
from ..reformulate import check_ncp_residual, eval_psi, jacobian_psi

ACCEPT_RESIDUAL = 1e-6
ENDGAME_ITERS = 50


def u1_norm(u: np.ndarray) -> float:
    """``||u||_2 / sqrt(n)``."""
    return float(np.linalg.norm(u)) / math.sqrt(u.shape[0])


def solves(problem, x) -> bool:
    residual, feasible = check_ncp_residual(problem, x)
    return residual <= ACCEPT_RESIDUAL and feasible


def polish(inst: HomotopyInstance, x, eps1: float, iters: int = ENDGAME_ITERS):
    """Newton on ``psi = 0``, i.e. the corrector at ``lambda = 0``.

    Near a corner where ``x_i`` and ``f_i`` are both small, ``psi_i`` is of
    sixth order and the path parameter no longer resolves the solution; Newton
    on the row-scaled system still converges there.

    Returns ``(x, |u|)`` for the iterate with the smallest recovered parameter
    ``u = psi(x) / psi(x0)`` among those solving the NCP, or None. The sign of
    ``u`` is rounding noise at this level, hence the absolute value.
    """
    problem = inst.sys.problem
    x = np.array(x, dtype=float)
    best = None
    for _ in range(iters):
        if not problem.in_domain(x):
            break
        psi = eval_psi(inst.sys, x)
        u = psi / inst.psi0
        if solves(problem, x) and (best is None or u1_norm(u) < u1_norm(best[1])):
            best = (x, u)
            if u1_norm(u) <= eps1:
                break
        try:
            dx = lu_solve(*equilibrate_rows(jacobian_psi(inst.sys, x), psi))
        except SingularMatrix:
            break
        x = x - dx
    if best is None:
        return None
    return best[0], np.clip(np.abs(best[1]), 0.0, 1.0)
