"""Arc-length ODE tracer, used as a cross-check on the predictor-corrector.

The path is followed in ``(x, lam)`` space with the parameter direction
reduced to a single family, ``dlam ~ -lam``, the same reduction the
predictor-corrector uses. Each step is classical RK4 in arc length followed by
Moore-Penrose re-projection onto ``H = 0``.
"""

from __future__ import annotations

import math
from typing import Iterator, Optional

import numpy as np

from ..exceptions import DegenerateStart, RankDeficient, SingularMatrix, SingularStart
from ..homotopy import HomotopyInstance, PathPoint, dH_dlambda, validate_start
from ..numerics import equilibrate_rows, pseudoinverse_apply, solve_with_sign
from ..reformulate import check_ncp_residual, eval_psi, jacobian_psi
from .endgame import polish, solves, u1_norm
from .types import Event, SolveReport, Status, TraceRecord, TracerConfig

PROJECT_ITERS = 5


def tangent(inst: HomotopyInstance, p: PathPoint, prev: Optional[np.ndarray] = None) -> np.ndarray:
    """Unit tangent ``mu`` of the path at ``p`` with ``[dH/dx | dH/dlam] mu = 0``.

    The parameter block is ``w = -lam / ||lam||_inf``. With ``prev`` the sign
    is chosen so that ``mu . prev > 0``; without it the parameter block points
    toward 0.

    Raises:
        SingularMatrix: ``dH/dx`` is singular at ``p``.
    """
    return _tangent(inst, p.x, p.lam, prev)[0]


def _tangent(inst, x, lam, prev):
    lam = np.asarray(lam, dtype=float)
    w = -lam / float(np.max(np.abs(lam)))
    jac = jacobian_psi(inst.sys, x)
    x_blk, sign = solve_with_sign(*equilibrate_rows(jac, dH_dlambda(inst) @ w))
    mu = np.concatenate([-x_blk, w])
    mu /= float(np.linalg.norm(mu))
    if prev is not None and float(mu @ prev) < 0.0:
        mu = -mu
    return mu, sign


class ArcLengthTracer:
    def __init__(self, inst: HomotopyInstance, cfg: TracerConfig | None = None):
        self.inst = inst
        self.cfg = cfg or TracerConfig()
        self.problem = inst.sys.problem
        self.n = inst.n
        self.trace: list[TraceRecord] = []
        self.report: SolveReport | None = None
        self.i = 0

    def _record(self, event, x, lam, det_sign=0) -> TraceRecord:
        lam = np.asarray(lam, dtype=float)
        if self.problem.in_domain(x):
            psi = eval_psi(self.inst.sys, x)
            psi_norm = float(np.max(np.abs(psi)))
            h_norm = float(np.max(np.abs(psi - lam * self.inst.psi0)))
        else:
            psi_norm = h_norm = math.nan
        rec = TraceRecord(self.i, Event(event), 0, int(det_sign), psi_norm, h_norm,
                          lam.copy(), np.array(x, dtype=float))
        self.trace.append(rec)
        return rec

    def _finish(self, status: Status, x, lam):
        x = np.array(x, dtype=float)
        residual, feasible = check_ncp_residual(self.problem, x)
        self.report = SolveReport(status, x, np.array(lam, dtype=float), residual, feasible,
                                  self.i, 0, self.trace, [self.inst.x0.copy()])

    def _mu(self, v: np.ndarray, prev: np.ndarray) -> tuple[np.ndarray, int]:
        n = self.n
        if not self.problem.in_domain(v[:n]) or np.max(np.abs(v[n:])) <= 0.0:
            raise SingularMatrix("tangent undefined off the domain")
        return _tangent(self.inst, v[:n], v[n:], prev)

    def _project(self, v: np.ndarray) -> np.ndarray:
        n, psi0 = self.n, self.inst.psi0
        for _ in range(PROJECT_ITERS):
            x, lam = v[:n], v[n:]
            if not self.problem.in_domain(x):
                raise SingularMatrix("re-projection left the domain")
            h = eval_psi(self.inst.sys, x) - lam * psi0
            target = np.max(np.abs(lam * psi0))
            if np.max(np.abs(h)) <= self.cfg.corrector_tol * target:
                break
            jh = np.hstack([jacobian_psi(self.inst.sys, x), -np.diag(psi0)])
            v = v - pseudoinverse_apply(*equilibrate_rows(jh, h))
        return v

    def _end(self, x, lam) -> Iterator[TraceRecord]:
        cfg = self.cfg
        polished = polish(self.inst, x, cfg.eps1)
        if polished is not None:
            x, lam = polished
            u1 = u1_norm(lam)
            yield self._record(Event.ACCEPT, x, lam)
            if u1 <= cfg.eps1:
                return self._finish(Status.ACCEPTED, x, lam)
            if u1 <= cfg.eps2:
                yield self._record(Event.PROBABLE, x, lam)
                return self._finish(Status.PROBABLE, x, lam)
        yield self._record(Event.FAIL, x, lam)
        return self._finish(Status.NON_CONVERGENCE, x, lam)

    def run(self) -> Iterator[TraceRecord]:
        cfg, n, h = self.cfg, self.n, self.cfg.ode_step
        x = self.inst.x0.copy()
        lam = np.ones(n)
        if solves(self.problem, x):
            lam = np.full(n, math.exp(-cfg.t_max))
            yield self._record(Event.ACCEPT, x, lam)
            return self._finish(Status.ACCEPTED, x, lam)
        try:
            d0 = validate_start(self.inst).d0_sign
        except DegenerateStart:
            yield self._record(Event.FAIL, x, lam)
            return self._finish(Status.DEGENERATE_START, x, lam)
        except SingularStart:
            yield self._record(Event.FAIL, x, lam)
            return self._finish(Status.SINGULAR_START, x, lam)
        yield self._record(Event.ACCEPT, x, lam, d0)

        v = np.concatenate([x, lam])
        try:
            mu = tangent(self.inst, PathPoint.start(self.inst))
        except SingularMatrix:
            yield self._record(Event.FAIL, x, lam)
            return self._finish(Status.SINGULAR_START, x, lam)
        arc = 0.0
        while arc < cfg.ode_max_arc:
            lam = v[n:]
            if np.max(lam) <= cfg.eps2:
                break
            # endgame: the next Euler step would cross lam = 0
            if np.any(lam + h * mu[n:] <= 0.0):
                down = mu[n:] < 0.0
                s = float(np.min(lam[down] / -mu[n:][down]))
                x_e = v[:n] + s * mu[:n]
                yield self._record(Event.PREDICT, x_e, np.maximum(lam + s * mu[n:], 0.0))
                return (yield from self._end(x_e, np.maximum(lam + s * mu[n:], 0.0)))
            try:
                k1 = mu
                k2 = self._mu(v + 0.5 * h * k1, k1)[0]
                k3 = self._mu(v + 0.5 * h * k2, k2)[0]
                k4 = self._mu(v + h * k3, k3)[0]
                v_new = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                v_new = self._project(v_new)
                if np.any(v_new[n:] <= 0.0):
                    raise SingularMatrix("parameter left the box")
                mu, d = self._mu(v_new, mu)
            except (SingularMatrix, RankDeficient):
                return (yield from self._end(v[:n], v[n:]))
            v = v_new
            arc += h
            self.i += 1
            yield self._record(Event.ACCEPT, v[:n], v[n:], d)
        if np.max(v[n:]) <= cfg.eps2:
            return (yield from self._end(v[:n], v[n:]))
        yield self._record(Event.FAIL, v[:n], v[n:])
        return self._finish(Status.ITERATION_LIMIT, v[:n], v[n:])


def iter_trace_ode(inst: HomotopyInstance, cfg: TracerConfig | None = None):
    engine = ArcLengthTracer(inst, cfg)
    yield from engine.run()
    return engine.report


def trace_ode(inst: HomotopyInstance, cfg: TracerConfig | None = None) -> SolveReport:
    engine = ArcLengthTracer(inst, cfg)
    for _ in engine.run():
        pass
    return engine.report
