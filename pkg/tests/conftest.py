import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ncp_homotopy import HomotopyInstance, ReformulatedSystem
from ncp_homotopy.homotopy import T_MAX
from ncp_homotopy.numerics import lu_solve
from ncp_homotopy.reformulate import eval_psi, jacobian_psi
from ncp_homotopy.tracer import Event
from ncp_homotopy.tracer.predictor_corrector import predictor_x

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict = {}


def instance(problem, x0=None):
    x0 = np.ones(problem.n) if x0 is None else np.asarray(x0, dtype=float)
    return HomotopyInstance.from_start(ReformulatedSystem(problem), x0)


def path_invariants(problem, report, identity_points: int = 20) -> dict:
    """Measure the path invariants over the accepted iterates of a run.

    Returns ``lam_box`` (all in (0, 1]), ``H_ok`` (all within
    ``1e-8 (1 + ||psi(x0)||_inf)``), ``identity`` (worst relative gap between
    the unit-rate predictor and the Newton step on ``psi``, over the first
    ``identity_points`` iterates whose parameters are above the cap) and
    ``x_max``.
    """
    sys = ReformulatedSystem(problem)
    insts = [HomotopyInstance.from_start(sys, s) for s in report.starts]
    accepted = [r for r in report.trace if r.event is Event.ACCEPT]
    lam_box = all(np.all(r.lam > 0.0) and np.all(r.lam <= 1.0) for r in accepted)
    bound = 1e-8 * (1.0 + float(np.max(np.abs(insts[0].psi0))))
    h_ok = all(r.H_norm <= bound for r in accepted)
    floor = math.exp(-T_MAX)
    worst = 0.0
    on_path = [r for r in accepted if np.all(r.lam > floor)][:identity_points]
    for r in on_path:
        inst = insts[r.segment]
        xd = predictor_x(inst, r.x, -np.log(r.lam), np.ones(problem.n))
        newton = -lu_solve(jacobian_psi(sys, r.x), eval_psi(sys, r.x))
        worst = max(worst, float(np.linalg.norm(xd - newton) / np.linalg.norm(newton)))
    x_max = max(float(np.max(np.abs(r.x))) for r in report.trace) if report.trace else 0.0
    return {"lam_box": lam_box, "H_ok": h_ok, "identity": worst,
            "identity_points": len(on_path), "x_max": x_max}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
