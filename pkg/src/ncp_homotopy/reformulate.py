"""NCP definition and its equivalent square system ``psi(z) = 0``.

With ``phi(y) = y**3`` each equation reads

    psi_i(z) = phi((f_i - z_i)**2) - phi(f_i |f_i|) - phi(z_i |z_i|)

and vanishes exactly when ``z_i >= 0``, ``f_i(z) >= 0`` and ``z_i f_i(z) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import DomainError
from .numerics import as_vec, fd_jacobian

PHI_EXPONENT = 3
FEAS_TOL = 1e-8


def phi(y):
    """The increasing map ``phi(y) = y**3`` (with ``phi(0) = 0``)."""
    return y ** PHI_EXPONENT


def dphi(y):
    return PHI_EXPONENT * y ** (PHI_EXPONENT - 1)


def sgn(y):
    """Sign with ``sgn(0) = 0``; works elementwise on arrays."""
    if np.ndim(y) == 0:
        return int(y > 0) - int(y < 0)
    return np.sign(y).astype(int)


def _always_ok(x: np.ndarray) -> bool:
    return True


@dataclass(frozen=True)
class NcpProblem:
    """Find ``z >= 0`` with ``f(z) >= 0`` and ``z . f(z) = 0``.

    ``domain_guard`` must return False wherever ``eval_f`` is undefined; the
    solver never evaluates ``f`` at such points.
    """

    n: int
    eval_f: Callable[[np.ndarray], np.ndarray]
    eval_jf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain_guard: Callable[[np.ndarray], bool] = _always_ok
    sample_domain: Optional[Callable[[np.random.Generator], np.ndarray]] = None
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be at least 1")

    def in_domain(self, x: np.ndarray) -> bool:
        return bool(self.domain_guard(x))

    def f(self, x) -> np.ndarray:
        x = as_vec(x, self.n)
        if not self.in_domain(x):
            raise DomainError(f"{self.name or 'problem'}: point outside the domain")
        return np.asarray(self.eval_f(x), dtype=float)

    def jf(self, x) -> np.ndarray:
        x = as_vec(x, self.n)
        if not self.in_domain(x):
            raise DomainError(f"{self.name or 'problem'}: point outside the domain")
        if self.eval_jf is None:
            return fd_jacobian(self.f, x)
        return np.asarray(self.eval_jf(x), dtype=float)

    def check_jacobian(self, n_points: int = 10, seed: int = 0, rtol: float = 1e-4) -> float:
        """Compare ``eval_jf`` against finite differences at sampled points.

        Returns the worst relative entry error. Raises ValueError when it
        exceeds ``rtol``. Without an analytic Jacobian or a sampler this is a
        no-op returning 0.
        """
        if self.eval_jf is None or self.sample_domain is None:
            return 0.0
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_points):
            x = as_vec(self.sample_domain(rng), self.n)
            worst = max(worst, relative_error(self.jf(x), fd_jacobian(self.f, x)))
        if worst > rtol:
            raise ValueError(
                f"{self.name or 'problem'}: analytic Jacobian disagrees with "
                f"finite differences (relative error {worst:.3g})"
            )
        return worst


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    """Max entrywise ``|a - b| / max(|b|, floor * max|b|)``.

    The floor keeps structurally-zero entries (where both sides are rounding
    noise) from dominating.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    big = float(np.max(np.abs(b))) if b.size else 0.0
    if big == 0.0:
        return float(np.max(np.abs(a))) if a.size else 0.0
    denom = np.maximum(np.abs(b), floor * big)
    return float(np.max(np.abs(a - b) / denom))


@dataclass(frozen=True)
class ReformulatedSystem:
    problem: NcpProblem
    phi_exponent: int = field(default=PHI_EXPONENT)

    def __post_init__(self):
        if self.phi_exponent != PHI_EXPONENT:
            raise ValueError("only phi(y) = y**3 is supported")

    @property
    def n(self) -> int:
        return self.problem.n


def _psi_direct(fx: np.ndarray, x: np.ndarray) -> np.ndarray:
    return phi((fx - x) ** 2) - phi(fx * np.abs(fx)) - phi(x * np.abs(x))


def _psi_from(fx: np.ndarray, x: np.ndarray) -> np.ndarray:
    # With c = f - x: c^6 - f^6 = -x (c^2 + c f + f^2)(c^3 + f^3) and
    # c^6 - x^6 = f (c^2 - c x + x^2)(c^3 - x^3). Pulling out the small factor
    # avoids the cancellation near a complementary pair (f_i ~ 0 or x_i ~ 0).
    u, v = fx, x
    c = u - v
    out = _psi_direct(u, v)
    small_v = (np.abs(v) <= np.abs(u)) & (u >= 0)
    small_u = (np.abs(u) < np.abs(v)) & (v >= 0)
    out = np.where(small_v, -v * (c * c + c * u + u * u) * (c ** 3 + u ** 3) - v ** 5 * np.abs(v), out)
    out = np.where(small_u, u * (c * c - c * v + v * v) * (c ** 3 - v ** 3) - u ** 5 * np.abs(u), out)
    return out


def eval_psi(sys: ReformulatedSystem, x) -> np.ndarray:
    """Evaluate ``psi`` in composed form (no expansion of the sixth powers)."""
    x = as_vec(x, sys.n)
    return _psi_from(sys.problem.f(x), x)


def jacobian_psi(sys: ReformulatedSystem, x) -> np.ndarray:
    """Analytic Jacobian of ``psi``.

    Entry (i, j) is::

        phi'((f_i - x_i)^2) 2 (f_i - x_i) (df_i/dx_j - delta_ij)
        - phi'(f_i |f_i|) 2 f_i sgn(f_i) df_i/dx_j
        - phi'(x_i |x_i|) 2 x_i sgn(x_i) delta_ij
    """
    x = as_vec(x, sys.n)
    fx = sys.problem.f(x)
    jf = sys.problem.jf(x)
    d = fx - x
    a = dphi(d * d) * 2.0 * d
    b = dphi(fx * np.abs(fx)) * 2.0 * fx * sgn(fx)
    c = dphi(x * np.abs(x)) * 2.0 * x * sgn(x)
    jac = (a - b)[:, None] * jf
    jac[np.diag_indices_from(jac)] -= a + c
    return jac


def psi_scale(sys: ReformulatedSystem, x) -> float:
    """``1 + ||f(x)||_inf**6 + ||x||_inf**6``, the natural size of ``psi``."""
    x = as_vec(x, sys.n)
    fx = sys.problem.f(x)
    return 1.0 + float(np.max(np.abs(fx))) ** 6 + float(np.max(np.abs(x))) ** 6


def check_ncp_residual(problem: NcpProblem, x, tol_feas: float = FEAS_TOL) -> tuple[float, bool]:
    """Complementarity residual ``||min(x, f(x))||_inf`` and a feasibility flag."""
    x = as_vec(x, problem.n)
    fx = problem.f(x)
    residual = float(np.max(np.abs(np.minimum(x, fx))))
    feasible = bool(np.all(x >= -tol_feas) and np.all(fx >= -tol_feas))
    return residual, feasible
