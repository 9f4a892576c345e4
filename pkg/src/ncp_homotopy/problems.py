"""Built-in problems: Cournot oligopoly, LCP adapter, synthetic generators."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from .exceptions import DomainError
from .numerics import as_mat, as_vec
from .reformulate import NcpProblem

Q_MIN = 1e-10
SEED_ENV = "NCP_HOMOTOPY_SEED"


def default_seed(fallback: int = 0) -> int:
    """Seed for randomized generators, overridable via ``NCP_HOMOTOPY_SEED``."""
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw not in (None, "") else fallback


@dataclass(frozen=True)
class OligopolyParams:
    """Cost ``c_i(Q) = n_i Q + b_i/(b_i+1) L_i^(1/b_i) Q^((b_i+1)/b_i)``
    and inverse demand from ``Qtot = demand_scale * P**(-demand_elasticity)``."""

    c_lin: tuple
    L: tuple
    beta: tuple
    demand_scale: float = 5000.0
    demand_elasticity: float = 1.1

    def __post_init__(self):
        k = len(self.c_lin)
        if not (len(self.L) == len(self.beta) == k) or k < 1:
            raise ValueError("firm parameter arrays must be non-empty and of equal length")
        if any(v <= 0 for v in self.L) or any(v <= 0 for v in self.beta):
            raise ValueError("L and beta must be positive")
        if any(v < 0 for v in self.c_lin):
            raise ValueError("linear cost coefficients must be non-negative")
        if self.demand_scale <= 0 or self.demand_elasticity <= 1:
            raise ValueError("need demand_scale > 0 and demand_elasticity > 1")

    @property
    def n_firms(self) -> int:
        return len(self.c_lin)

    def subset(self, k: int) -> "OligopolyParams":
        """The market restricted to the first ``k`` firms."""
        return OligopolyParams(self.c_lin[:k], self.L[:k], self.beta[:k],
                               self.demand_scale, self.demand_elasticity)


# The equilibrium below solves the market with beta_4 = 0.9, beta_5 = 0.8 (the
# original five-firm data); the table it is usually quoted with prints 0.8, 0.6
# for those two firms, which gives a different equilibrium. Both are available.
MURPHY5 = OligopolyParams(
    c_lin=(10.0, 8.0, 6.0, 4.0, 2.0),
    L=(5.0, 5.0, 5.0, 5.0, 5.0),
    beta=(1.2, 1.1, 1.0, 0.9, 0.8),
)

TABLE1_PRINTED = OligopolyParams(
    c_lin=(10.0, 8.0, 6.0, 4.0, 2.0),
    L=(5.0, 5.0, 5.0, 5.0, 5.0),
    beta=(1.2, 1.1, 1.0, 0.8, 0.6),
)

#: Equilibrium output levels reported for ``MURPHY5`` (six decimals).
MURPHY5_SOLUTION = np.array([15.429308, 12.498582, 9.663473, 7.165093, 5.132566])


def _arrays(params: OligopolyParams):
    return (np.asarray(params.c_lin, dtype=float), np.asarray(params.L, dtype=float),
            np.asarray(params.beta, dtype=float))


def cournot_in_domain(Q: np.ndarray) -> bool:
    return bool(np.all(Q >= Q_MIN) and np.sum(Q) >= Q_MIN)


def _power(base, expo):
    # base >= Q_MIN > 0 is guaranteed by the domain guard
    return np.exp(expo * np.log(base))


def _price_terms(params: OligopolyParams, total: float):
    inv_e = 1.0 / params.demand_elasticity
    p = _power(params.demand_scale, inv_e) * _power(total, -inv_e)
    dp = -inv_e * p / total
    d2p = inv_e * (inv_e + 1.0) * p / total ** 2
    return p, dp, d2p


def marginal_cost(params: OligopolyParams, Q) -> np.ndarray:
    """``c_i'(Q_i) = n_i + (L_i Q_i)^(1/beta_i)``."""
    c, L, b = _arrays(params)
    return c + _power(L * np.asarray(Q, dtype=float), 1.0 / b)


def cournot_f(params: OligopolyParams, Q) -> np.ndarray:
    """``f_i = c_i'(Q_i) - P(Qtot) - Q_i P'(Qtot)``."""
    Q = as_vec(Q, params.n_firms)
    if not cournot_in_domain(Q):
        raise DomainError("Cournot map needs every Q_i >= 1e-10")
    p, dp, _ = _price_terms(params, float(np.sum(Q)))
    return marginal_cost(params, Q) - p - Q * dp


def cournot_jf(params: OligopolyParams, Q) -> np.ndarray:
    Q = as_vec(Q, params.n_firms)
    if not cournot_in_domain(Q):
        raise DomainError("Cournot map needs every Q_i >= 1e-10")
    _, L, b = _arrays(params)
    _, dp, d2p = _price_terms(params, float(np.sum(Q)))
    n = Q.shape[0]
    jac = np.empty((n, n))
    jac[:] = (-dp - Q * d2p)[:, None]
    jac[np.diag_indices(n)] += -dp + (1.0 / b) * _power(L, 1.0 / b) * _power(Q, 1.0 / b - 1.0)
    return jac


def cournot_problem(params: OligopolyParams, name: str = "cournot") -> NcpProblem:
    return NcpProblem(
        n=params.n_firms,
        eval_f=lambda Q: cournot_f(params, Q),
        eval_jf=lambda Q: cournot_jf(params, Q),
        domain_guard=cournot_in_domain,
        sample_domain=lambda rng: rng.uniform(0.5, 30.0, params.n_firms),
        name=name,
    )


@dataclass(frozen=True)
class LcpData:
    M: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        q = as_vec(self.q)
        M = as_mat(self.M, q.shape[0], q.shape[0])
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "M", M)

    @property
    def n(self) -> int:
        return self.q.shape[0]


def lcp_as_ncp(data: LcpData, name: str = "lcp") -> NcpProblem:
    M, q = data.M, data.q
    return NcpProblem(
        n=data.n,
        eval_f=lambda z: M @ z + q,
        eval_jf=lambda z: M.copy(),
        sample_domain=lambda rng: rng.normal(size=data.n),
        name=name,
    )


def diag_dominant_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random strictly row-diagonally-dominant matrix with positive diagonal.

    Such a matrix is a P-matrix, so the LCP has exactly one solution.
    """
    m = rng.uniform(-1.0, 1.0, (n, n))
    np.fill_diagonal(m, 0.0)
    np.fill_diagonal(m, np.sum(np.abs(m), axis=1) + rng.uniform(0.5, 2.0, n))
    return m


def random_lcp(n: int, seed: int) -> LcpData:
    rng = np.random.default_rng(seed)
    return LcpData(diag_dominant_matrix(n, rng), rng.uniform(-2.0, 2.0, n))


def synth_solution_instance(n: int, seed: int) -> tuple[NcpProblem, np.ndarray]:
    """An NCP with a known nondegenerate solution.

    Builds ``f(z) = M (z - z*) + w`` where on a random index set ``z*_i > 0``
    and ``w_i = 0``, elsewhere ``z*_i = 0`` and ``w_i > 0``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    active = rng.random(n) < 0.5
    z_star = np.where(active, rng.uniform(0.2, 2.0, n), 0.0)
    w = np.where(active, 0.0, rng.uniform(0.2, 2.0, n))
    M = diag_dominant_matrix(n, rng)
    data = LcpData(M, w - M @ z_star)
    return lcp_as_ncp(data, name=f"synth-{n}-{seed}"), z_star


_REGISTRY: Dict[str, Callable[[], NcpProblem]] = {}


def register_problem(name: str, factory: Callable[[], NcpProblem]) -> None:
    """Register a builtin; its analytic Jacobian is checked once here."""
    factory().check_jacobian()
    _REGISTRY[name] = factory


def get_builtin(name: str) -> NcpProblem:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown builtin problem {name!r}; known: {sorted(_REGISTRY)}") from None


def builtin_names() -> list[str]:
    return sorted(_REGISTRY)


register_problem("cournot-murphy5", lambda: cournot_problem(MURPHY5, name="cournot-murphy5"))
register_problem("cournot-table1", lambda: cournot_problem(TABLE1_PRINTED, name="cournot-table1"))
