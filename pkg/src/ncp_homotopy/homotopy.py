"""Vector-parameter homotopy ``H(x, lam) = psi(x) - lam * psi(x0)``.

``lam`` is a vector in ``(0, 1]^n`` multiplied componentwise. Tracers work in
``t`` coordinates, ``lam_i = exp(-t_i)``, so that ``t = 0`` is the start and
``t -> inf`` the target system ``psi(x) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateStart, SingularStart
from .numerics import as_vec, lu_solve, sign_logdet
from .reformulate import ReformulatedSystem, eval_psi, jacobian_psi, psi_scale

T_MAX = 40.0
DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class HomotopyInstance:
    sys: ReformulatedSystem
    x0: np.ndarray
    psi0: np.ndarray

    @classmethod
    def from_start(cls, sys: ReformulatedSystem, x0) -> "HomotopyInstance":
        x0 = as_vec(x0, sys.n)
        return cls(sys, x0, eval_psi(sys, x0))

    @property
    def n(self) -> int:
        return self.sys.n

    @property
    def scale(self) -> float:
        """``1 + ||psi(x0)||_inf``, used to size residual tolerances on ``H``."""
        return 1.0 + float(np.max(np.abs(self.psi0)))


@dataclass(frozen=True)
class PathPoint:
    x: np.ndarray
    t: np.ndarray
    lam: np.ndarray

    @classmethod
    def from_t(cls, x, t) -> "PathPoint":
        t = np.asarray(t, dtype=float)
        return cls(np.asarray(x, dtype=float), t, np.exp(-t))

    @classmethod
    def start(cls, inst: HomotopyInstance) -> "PathPoint":
        return cls.from_t(inst.x0.copy(), np.zeros(inst.n))


def eval_H(inst: HomotopyInstance, p: PathPoint) -> np.ndarray:
    return eval_psi(inst.sys, p.x) - p.lam * inst.psi0


def eval_H_lam(inst: HomotopyInstance, x, lam) -> np.ndarray:
    """``H`` with the parameter given directly in ``lam`` coordinates."""
    return eval_psi(inst.sys, x) - np.asarray(lam, dtype=float) * inst.psi0


def dH_dx(inst: HomotopyInstance, p: PathPoint) -> np.ndarray:
    return jacobian_psi(inst.sys, p.x)


def dH_dlambda(inst: HomotopyInstance) -> np.ndarray:
    return -np.diag(inst.psi0)


def dH_dt(inst: HomotopyInstance, p: PathPoint) -> np.ndarray:
    return np.diag(inst.psi0 * np.exp(-p.t))


@dataclass(frozen=True)
class StartReport:
    d0_sign: int
    d0_logdet: float
    s0: np.ndarray
    identity_ok: bool
    ok: bool


def start_block_identity(inst: HomotopyInstance, lam) -> tuple[tuple[int, float], tuple[int, float]]:
    """Both sides of ``det(-diag(lam) Jpsi(x0)) = (-1)^n det Jpsi(x0) prod(lam)``.

    The left side is factored directly; the right side is assembled from
    ``sign_logdet(Jpsi(x0))``. Each side is a ``(sign, log|det|)`` pair.
    """
    lam = as_vec(lam, inst.n)
    j0 = jacobian_psi(inst.sys, inst.x0)
    lhs = sign_logdet(-lam[:, None] * j0)
    s, ld = sign_logdet(j0)
    rhs = ((-1) ** inst.n * s, ld + float(np.sum(np.log(lam))))
    return lhs, rhs


def validate_start(inst: HomotopyInstance) -> StartReport:
    """Check the start point admits a regular path.

    Raises:
        DegenerateStart: some ``|psi_i(x0)|`` is at or below ``1e-12`` times
            the natural scale of ``psi``.
        SingularStart: ``Jpsi(x0)`` is singular.
    """
    scale = psi_scale(inst.sys, inst.x0)
    if np.any(np.abs(inst.psi0) <= DEGENERATE_RTOL * scale):
        raise DegenerateStart("psi(x0) has a zero component")
    sign, logdet = sign_logdet(jacobian_psi(inst.sys, inst.x0))
    if sign == 0:
        raise SingularStart("Jacobian of psi is singular at x0")
    lhs, rhs = start_block_identity(inst, np.ones(inst.n))
    identity_ok = lhs[0] == rhs[0] and math.isclose(lhs[1], rhs[1], rel_tol=0, abs_tol=1e-8)
    return StartReport(sign, logdet, -np.ones(inst.n), identity_ok, True)


def predictor_check_matrix(inst: HomotopyInstance) -> np.ndarray:
    """The ``2n x 2n`` orientation matrix at ``(x0, e)``.

    Top block is ``[Jpsi(x0) | -diag(psi(x0))]``. The bottom block stacks the
    transposed tangents obtained by decreasing one ``lam_i`` at unit rate;
    their sum is the start predictor direction.
    """
    r1 = jacobian_psi(inst.sys, inst.x0)
    r2 = dH_dlambda(inst)
    a = np.column_stack([lu_solve(r1, r2[:, i]) for i in range(inst.n)])
    top = np.hstack([r1, r2])
    bottom = np.hstack([a.T, -np.eye(inst.n)])
    return np.vstack([top, bottom])


def start_predictor(inst: HomotopyInstance) -> np.ndarray:
    """Positive predictor direction at the start, ``(Jpsi^-1 R2 e, -e)``."""
    r1 = jacobian_psi(inst.sys, inst.x0)
    r2 = dH_dlambda(inst)
    return np.concatenate([lu_solve(r1, r2 @ np.ones(inst.n)), -np.ones(inst.n)])


def predictor_sign_check(inst: HomotopyInstance) -> bool:
    """Whether the orientation determinant has sign ``(-1)^n sign det Jpsi(x0)``."""
    report = validate_start(inst)
    sign, _ = sign_logdet(predictor_check_matrix(inst))
    return sign == (-1) ** inst.n * report.d0_sign
