from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import List

import numpy as np

from ..homotopy import T_MAX


class Status(str, Enum):
    ACCEPTED = "Accepted"
    PROBABLE = "Probable"
    NON_CONVERGENCE = "NonConvergence"
    SINGULAR_START = "SingularStart"
    DEGENERATE_START = "DegenerateStart"
    ITERATION_LIMIT = "IterationLimit"


class Event(str, Enum):
    PREDICT = "predict"
    CORRECT = "correct"
    RESTART = "restart"
    SHRINK = "shrink"
    ACCEPT = "accept"
    PROBABLE = "probable"
    FAIL = "fail"


@dataclass(frozen=True)
class TracerConfig:
    """Path-following constants.

    ``eta1, c0, kappa1, kappa2, eps1, eps2`` default to the algorithm's own
    settings. ``eta2`` (restart threshold on the step), the iteration caps and
    the corrector/ODE settings are ours.
    """

    eta1: float = 1e-12
    eta2: float = 1e-8
    c0: int = 50
    kappa1: float = math.sqrt(2.0)
    kappa2: float = 9000.0
    eps1: float = 1e-16
    eps2: float = 1e-10
    t_max: float = T_MAX
    max_iters: int = 10000
    max_restarts: int = 20
    corrector_iters: int = 5
    corrector_tol: float = 1e-10
    ode_step: float = 1e-2
    ode_max_arc: float = 1e4

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")
        if not (self.eps1 < self.eps2 < self.eta2 < 1.0):
            raise ValueError("need eps1 < eps2 < eta2 < 1")
        if not (1.0 < self.kappa1 < self.kappa2):
            raise ValueError("need 1 < kappa1 < kappa2")

    def with_overrides(self, **kw) -> "TracerConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    event: Event
    k: int
    det_sign: int
    psi_norm: float
    H_norm: float
    lam: np.ndarray
    x: np.ndarray
    #: restart count when recorded; ``SolveReport.starts[segment]`` is the
    #: start point the record's ``H`` refers to
    segment: int = 0


@dataclass
class SolveReport:
    status: Status
    x_final: np.ndarray
    lambda_final: np.ndarray
    ncp_residual: float
    feasible: bool
    iters: int
    restarts: int
    trace: List[TraceRecord] = field(default_factory=list)
    starts: List[np.ndarray] = field(default_factory=list)

    @property
    def u1(self) -> float:
        """``||lambda_final||_2 / sqrt(n)``."""
        lam = np.asarray(self.lambda_final, dtype=float)
        return float(np.linalg.norm(lam) / math.sqrt(lam.shape[0]))

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "x": [float(v) for v in self.x_final],
            "lambda": [float(v) for v in self.lambda_final],
            "residual": float(self.ncp_residual),
            "iters": int(self.iters),
            "restarts": int(self.restarts),
        }
