"""Predictor-corrector tracing of ``psi(x) = exp(-t) * psi(x0)``.

Each iteration:

* picks the predictor in ``(x, t)`` space. Normally every ``t_i`` advances at
  unit rate; after the sign of ``det Jpsi`` flips relative to the start, ``t``
  is pulled back toward 0 instead;
* grows the step ``kappa1**k`` while the trial point stays in the domain,
  keeps ``0 < t < t_max`` and (on a descent direction) keeps lowering
  ``||psi||^2``;
* corrects with Moore-Penrose Newton steps on ``H`` and reads the parameter
  back off the corrected point as ``u_i = psi_i(x_c) / psi_i(x0)``;
* backtracks on a rejected point, and restarts from the last corrected point
  once the step has collapsed;
* when the path is exhausted or stalls near its end, finishes with Newton on
  ``psi = 0`` (see :mod:`.endgame`).
"""

from __future__ import annotations

import math
from typing import Iterator, Optional

import numpy as np

from ..exceptions import DegenerateStart, RankDeficient, SingularMatrix, SingularStart
from ..homotopy import HomotopyInstance, validate_start
from ..numerics import equilibrate_rows, lu_solve, pseudoinverse_apply, sign_logdet
from ..reformulate import check_ncp_residual, eval_psi, jacobian_psi
from .endgame import polish, solves, u1_norm
from .types import Event, SolveReport, Status, TraceRecord, TracerConfig

CLAMP_SLACK = 1e-12


def predictor_x(inst: HomotopyInstance, x, t, t_d, jac: Optional[np.ndarray] = None) -> np.ndarray:
    """``x_d = -(dH/dx)^-1 (dH/dt) t_d``."""
    if jac is None:
        jac = jacobian_psi(inst.sys, x)
    return -lu_solve(*equilibrate_rows(jac, inst.psi0 * np.exp(-np.asarray(t, dtype=float)) * t_d))


def recover_lambda(inst: HomotopyInstance, x) -> np.ndarray:
    """Parameter value that puts ``x`` exactly on ``H = 0``, i.e.
    ``psi_i(x) / psi_i(x0)``."""
    return eval_psi(inst.sys, x) / inst.psi0


def admissible_lambda(u: np.ndarray, eps1: float) -> np.ndarray | None:
    """Clamp a recovered parameter into ``[0, 1]`` or return None.

    Values in ``(1, 1 + 1e-12]`` are start-point rounding; values in
    ``[-eps1, 0]`` mean the component has reached the target within the
    acceptance threshold.
    """
    if np.all((u >= -eps1) & (u <= 1.0 + CLAMP_SLACK)):
        return np.clip(u, 0.0, 1.0)
    return None


def lambda_to_t(u: np.ndarray, t_max: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.minimum(-np.log(u), t_max)


class PredictorCorrector:
    """One tracing run. Iterate :meth:`run` for the trace; ``report`` is set
    when the iterator is exhausted."""

    def __init__(self, inst: HomotopyInstance, cfg: TracerConfig | None = None):
        self.inst = inst
        self.cfg = cfg or TracerConfig()
        self.problem = inst.sys.problem
        self.n = inst.n
        self.report: SolveReport | None = None
        self.trace: list[TraceRecord] = []
        self.starts: list[np.ndarray] = [inst.x0.copy()]

    # -- helpers -----------------------------------------------------------

    def _psi(self, x):
        return eval_psi(self.inst.sys, x)

    def _mu(self, x) -> float:
        p = self._psi(x)
        return float(p @ p)

    def _record(self, event, x, t, k=0, det_sign=0) -> TraceRecord:
        lam = np.exp(-np.asarray(t, dtype=float))
        if self.problem.in_domain(x):
            psi = self._psi(x)
            psi_norm = float(np.max(np.abs(psi)))
            h_norm = float(np.max(np.abs(psi - lam * self.inst.psi0)))
        else:
            psi_norm = h_norm = math.nan
        rec = TraceRecord(self.i, Event(event), int(k), int(det_sign), psi_norm, h_norm,
                          lam.copy(), np.array(x, dtype=float), self.ic)
        self.trace.append(rec)
        return rec

    def _finish(self, status: Status, x, t):
        x = np.array(x, dtype=float)
        lam = np.exp(-np.asarray(t, dtype=float))
        residual, feasible = check_ncp_residual(self.problem, x)
        self.report = SolveReport(status, x, lam, residual, feasible, self.i, self.ic, self.trace,
                                  self.starts)

    def _solves(self, x) -> bool:
        return solves(self.problem, x)

    def _stalled(self) -> Status:
        # lambda under eps1 without an NCP solution is not a "probable" point
        if self.cfg.eps1 < self.u1 <= self.cfg.eps2:
            return Status.PROBABLE
        return Status.NON_CONVERGENCE

    def _stop(self, x, t):
        """End a run that cannot advance: endgame first, then Probable or
        NonConvergence by the size of the last recovered parameter."""
        if self.u1 <= self.cfg.eps2:
            polished = polish(self.inst, x, self.cfg.eps1)
            if polished is not None and u1_norm(polished[1]) <= self.cfg.eps2:
                x, u = polished
                t = lambda_to_t(u, self.cfg.t_max)
                self.u1 = u1_norm(u)
                yield self._record(Event.ACCEPT, x, t)
                if self.u1 <= self.cfg.eps1:
                    return self._finish(Status.ACCEPTED, x, t)
        status = self._stalled()
        yield self._record(Event.PROBABLE if status is Status.PROBABLE else Event.FAIL, x, t)
        return self._finish(status, x, t)

    def _predicted_lambda(self, x_p):
        if not self.problem.in_domain(x_p):
            return None
        return admissible_lambda(recover_lambda(self.inst, x_p), self.cfg.eps1)

    def _grow(self, x, t, x_n, t_n, gamma) -> tuple[int, bool]:
        """Largest admissible ``k`` and whether the ``kappa2`` cap was hit."""
        cfg = self.cfg
        k = 0
        mu_k = self._mu(x + x_n) if gamma < 0 and self.problem.in_domain(x + x_n) else math.inf
        while True:
            step = cfg.kappa1 ** (k + 1)
            xk = x + step * x_n
            tk = t + step * t_n
            if not self.problem.in_domain(xk) or not np.all((tk > 0.0) & (tk < cfg.t_max)):
                return k, False
            if gamma < 0:
                mu_next = self._mu(xk)
                if not mu_next < mu_k:
                    return k, False
                mu_k = mu_next
            k += 1
            if cfg.kappa1 ** k > cfg.kappa2:
                return k - 1, True

    def _correct(self, x_p, t_p):
        """Moore-Penrose Newton on ``H``; returns ``(x_c, t_c, ok)``."""
        cfg, inst, n = self.cfg, self.inst, self.n
        x, t = x_p.copy(), t_p.copy()
        for _ in range(cfg.corrector_iters):
            if not self.problem.in_domain(x):
                return x, t, False
            lam = np.exp(-t)
            target = lam * inst.psi0
            h = self._psi(x) - target
            # relative to the current level of the path, not the start
            if np.max(np.abs(h)) <= cfg.corrector_tol * np.max(np.abs(target)):
                break
            jh = np.hstack([jacobian_psi(inst.sys, x), np.diag(inst.psi0 * lam)])
            try:
                delta = pseudoinverse_apply(*equilibrate_rows(jh, h))
            except RankDeficient:
                return x, t, False
            x = x - delta[:n]
            t = t - delta[n:]
        return x, t, self.problem.in_domain(x)

    # -- main loop ---------------------------------------------------------

    def run(self) -> Iterator[TraceRecord]:
        cfg, n = self.cfg, self.n
        self.i = 0
        self.ic = 0
        self.u1 = 1.0
        event = Event.ACCEPT
        while True:
            # Step 1: (re)start at (x0, t = 0)
            x = self.inst.x0.copy()
            t = np.zeros(n)
            if self.ic == 0 and self._solves(x):
                # nothing to trace; report the target end of the parameter box
                t = np.full(n, cfg.t_max)
                self.u1 = u1_norm(np.exp(-t))
                yield self._record(Event.ACCEPT, x, t)
                return self._finish(Status.ACCEPTED, x, t)
            try:
                d0 = validate_start(self.inst).d0_sign
            except DegenerateStart:
                yield self._record(Event.FAIL, x, t)
                return self._finish(Status.DEGENERATE_START, x, t)
            except SingularStart:
                yield self._record(Event.FAIL, x, t)
                return self._finish(Status.SINGULAR_START, x, t)
            yield self._record(event, x, t, det_sign=d0)
            c1 = c2 = c3 = 0
            best_u1 = self.u1

            restart_at = None
            while restart_at is None:
                # Step 2
                lam = np.exp(-t)
                jac = jacobian_psi(self.inst.sys, x)
                psi_x = self._psi(x)
                d, _ = sign_logdet(equilibrate_rows(jac, psi_x)[0])
                if d == 0:
                    return (yield from self._stop(x, t))

                # Step 3: direction in (x, t); N = dlam/dt = -diag(lam)
                if d == -d0:
                    t_d = -(1.0 - lam) / lam
                else:
                    t_d = np.ones(n)
                try:
                    x_d = predictor_x(self.inst, x, t, t_d, jac)
                except SingularMatrix:
                    return (yield from self._stop(x, t))
                norm = math.sqrt(float(x_d @ x_d + t_d @ t_d))
                x_n, t_n = x_d / norm, t_d / norm
                tau = float(np.linalg.norm(t_d)) / norm
                c1 = c1 + 1 if tau <= cfg.eta1 else 0
                if c1 >= cfg.c0:
                    return (yield from self._stop(x, t))

                # Steps 4-5: step length
                gamma = float(2.0 * (jac.T @ psi_x) @ x_n)
                k, capped = self._grow(x, t, x_n, t_n, gamma)
                c2 = c2 + 1 if capped else 0

                # Steps 6-8: predict, correct, backtrack
                while True:
                    if c2 >= cfg.c0:
                        return (yield from self._stop(x, t))
                    step = cfg.kappa1 ** k
                    x_p, t_p = x + step * x_n, t + step * t_n
                    yield self._record(Event.PREDICT, x_p, t_p, k, d)
                    x_c, t_c, ok = self._correct(x_p, t_p)
                    if ok:
                        yield self._record(Event.CORRECT, x_c, t_c, k, d)
                        u_s = admissible_lambda(recover_lambda(self.inst, x_c), cfg.eps1)
                        if u_s is None or u1_norm(u_s) >= self.u1:
                            # Below the resolution of x the corrector can only
                            # pull an exact predictor back; keep the latter.
                            u_p = self._predicted_lambda(x_p)
                            if u_p is not None and (u_s is None or u1_norm(u_p) < u1_norm(u_s)):
                                x_c, u_s = x_p, u_p
                        if u_s is not None:
                            break
                    yield self._record(Event.SHRINK, x, t, k, d)
                    k -= 1
                    dist = float(np.linalg.norm(x - x_c)) if ok else math.inf
                    if min(cfg.kappa1 ** k, dist) <= cfg.eta2:
                        restart_at = x_c if ok else x
                        break
                if restart_at is not None:
                    break

                # Step 10: advance
                t = lambda_to_t(u_s, cfg.t_max)
                x = x_c
                u1 = u1_norm(u_s)
                # against the best so far, so a two-cycle also counts as a stall
                c3 = c3 + 1 if u1 >= best_u1 else 0
                best_u1 = min(best_u1, u1)
                self.u1 = u1
                yield self._record(Event.ACCEPT, x, t, k, d)
                if self.u1 <= cfg.eps1:
                    if self._solves(x):
                        return self._finish(Status.ACCEPTED, x, t)
                    # the path is exhausted; only the endgame can help
                    return (yield from self._stop(x, t))
                self.i += 1
                if c3 >= cfg.c0:
                    return (yield from self._stop(x, t))
                if self.i > cfg.max_iters:
                    return self._finish(Status.ITERATION_LIMIT, x, t)

            # Step 9: restart from the last corrected point
            if self.u1 <= cfg.eps2:
                return (yield from self._stop(x, t))
            self.ic += 1
            if self.ic > cfg.max_restarts:
                return self._finish(Status.ITERATION_LIMIT, x, t)
            self.inst = HomotopyInstance.from_start(self.inst.sys, restart_at)
            self.starts.append(self.inst.x0.copy())
            event = Event.RESTART


def iter_trace_pc(inst: HomotopyInstance, cfg: TracerConfig | None = None):
    """Yield trace records as they are produced; the generator's return value
    is the final :class:`SolveReport`."""
    engine = PredictorCorrector(inst, cfg)
    yield from engine.run()
    return engine.report


def trace_pc(inst: HomotopyInstance, cfg: TracerConfig | None = None) -> SolveReport:
    engine = PredictorCorrector(inst, cfg)
    for _ in engine.run():
        pass
    return engine.report
