"""Homotopy solver for nonlinear complementarity problems.

The NCP ``z >= 0, f(z) >= 0, z . f(z) = 0`` is rewritten as a square system
``psi(z) = 0`` and solved by tracing ``psi(x) = lam * psi(x0)`` from
``lam = 1`` to ``lam = 0`` with a separate parameter per equation.
"""

from .exceptions import (
    DegenerateStart,
    DomainError,
    NcpError,
    NoCandidate,
    RankDeficient,
    SingularMatrix,
    SingularStart,
)
from .homotopy import HomotopyInstance, PathPoint, validate_start
from .problems import (
    MURPHY5,
    MURPHY5_SOLUTION,
    LcpData,
    OligopolyParams,
    builtin_names,
    cournot_problem,
    get_builtin,
    lcp_as_ncp,
)
from .reformulate import NcpProblem, ReformulatedSystem, check_ncp_residual, eval_psi, jacobian_psi
from .tracer import SolveReport, Status, TracerConfig, trace_ode, trace_pc


def solve(problem: NcpProblem, x0=None, cfg: TracerConfig | None = None, tracer: str = "pc") -> SolveReport:
    """Solve ``problem`` from ``x0`` (default: all ones)."""
    import numpy as np

    x0 = np.ones(problem.n) if x0 is None else x0
    inst = HomotopyInstance.from_start(ReformulatedSystem(problem), x0)
    return (trace_ode if tracer == "ode" else trace_pc)(inst, cfg)


__all__ = [
    "DegenerateStart", "DomainError", "HomotopyInstance", "LcpData", "MURPHY5",
    "MURPHY5_SOLUTION", "NcpError", "NcpProblem", "NoCandidate", "OligopolyParams",
    "PathPoint", "RankDeficient", "ReformulatedSystem", "SingularMatrix", "SingularStart",
    "SolveReport", "Status", "TracerConfig", "builtin_names", "check_ncp_residual",
    "cournot_problem", "eval_psi", "get_builtin", "jacobian_psi", "lcp_as_ncp", "solve",
    "trace_ode", "trace_pc", "validate_start",
]
