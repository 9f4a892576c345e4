import math

import numpy as np
import pytest

from ncp_homotopy.homotopy import PathPoint, T_MAX, dH_dlambda
from ncp_homotopy.problems import (
    MURPHY5_SOLUTION,
    LcpData,
    get_builtin,
    lcp_as_ncp,
    synth_solution_instance,
)
from ncp_homotopy.reformulate import NcpProblem, check_ncp_residual, jacobian_psi
from ncp_homotopy.tracer import (
    Event,
    Status,
    TracerConfig,
    iter_trace_pc,
    tangent,
    trace_ode,
    trace_pc,
)
from ncp_homotopy.tracer.predictor_corrector import admissible_lambda, lambda_to_t, recover_lambda

from conftest import instance, path_invariants


def _scalar(a):
    return NcpProblem(1, lambda x: x - a, lambda x: np.eye(1), name=f"x-{a}")


def _coherent(problem, report):
    if report.status is Status.ACCEPTED:
        res, feas = check_ncp_residual(problem, report.x_final)
        assert res <= 1e-6 and feas
    if report.status is Status.PROBABLE:
        assert report.u1 <= TracerConfig().eps2


@pytest.mark.parametrize("a", [0.3, 0.5, 2.0, 5.0, 100.0])
def test_scalar_closed_form(a):
    p = _scalar(a)
    report = trace_pc(instance(p))
    assert report.status is Status.ACCEPTED
    assert abs(report.x_final[0] - a) <= 1e-6


def test_two_by_two_lcp():
    p = lcp_as_ncp(LcpData(np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([-1.0, -1.0])))
    report = trace_pc(instance(p))
    assert report.status is Status.ACCEPTED
    assert np.max(np.abs(report.x_final - 1 / 3)) <= 1e-6


def test_oligopoly():
    p = get_builtin("cournot-murphy5")
    report = trace_pc(instance(p))
    assert report.status is Status.ACCEPTED
    assert np.max(np.abs(report.x_final - MURPHY5_SOLUTION)) <= 1e-3
    assert np.all(report.lambda_final <= 1e-10)
    _coherent(p, report)


@pytest.mark.parametrize("seed", range(50))
def test_synth_recovers_known_solution(seed):
    n = 1 + seed % 6
    p, z = synth_solution_instance(n, seed)
    report = trace_pc(instance(p))
    _coherent(p, report)
    assert report.status in (Status.ACCEPTED, Status.PROBABLE)
    assert np.max(np.abs(report.x_final - z)) <= 1e-6


@pytest.mark.parametrize("seed", range(0, 50, 5))
def test_path_invariants(seed):
    p, _ = synth_solution_instance(1 + seed % 6, seed)
    x0 = np.ones(p.n)
    report = trace_pc(instance(p, x0))
    inv = path_invariants(p, report)
    assert inv["lam_box"] and inv["H_ok"]
    assert inv["identity"] <= 1e-8
    assert inv["x_max"] <= 1e3 * (1 + np.max(np.abs(x0)) + np.max(np.abs(report.x_final)))


def test_oligopoly_boundedness():
    p = get_builtin("cournot-murphy5")
    report = trace_pc(instance(p))
    inv = path_invariants(p, report)
    assert inv["x_max"] <= 1e3 * (1 + 1 + np.max(np.abs(report.x_final)))


def test_determinism():
    p = get_builtin("cournot-murphy5")
    a = trace_pc(instance(p))
    b = trace_pc(instance(p))
    assert len(a.trace) == len(b.trace)
    for ra, rb in zip(a.trace, b.trace):
        assert ra.event is rb.event and ra.k == rb.k
        assert np.array_equal(ra.x, rb.x) and np.array_equal(ra.lam, rb.lam)
        assert ra.H_norm == rb.H_norm


def test_iterator_matches_report():
    p = _scalar(2.0)
    gen = iter_trace_pc(instance(p))
    records = []
    while True:
        try:
            records.append(next(gen))
        except StopIteration as stop:
            report = stop.value
            break
    assert len(records) == len(report.trace)
    assert records[-1].event is Event.ACCEPT


def test_start_already_solves():
    p = lcp_as_ncp(LcpData(np.eye(2), -np.ones(2)))
    report = trace_pc(instance(p))
    assert report.status is Status.ACCEPTED
    assert report.iters == 0
    assert np.all(report.lambda_final == math.exp(-T_MAX))


def test_degenerate_start_status():
    # psi_1(x0) = 0 but x0 does not solve the problem
    p = lcp_as_ncp(LcpData(np.eye(2), -np.ones(2)))
    report = trace_pc(instance(p, [1.0, 2.0]))
    assert report.status is Status.DEGENERATE_START


def test_singular_start_status():
    e = 2.0 / 31.0
    m = np.array([[0.5, 0.5 + e], [0.5 + e, 0.5]])
    p = lcp_as_ncp(LcpData(m, 2.0 - m @ np.ones(2)))
    assert trace_pc(instance(p)).status is Status.SINGULAR_START
    assert trace_ode(instance(p)).status is Status.SINGULAR_START


def test_iteration_limit():
    report = trace_pc(instance(get_builtin("cournot-murphy5")), TracerConfig(max_iters=2))
    assert report.status is Status.ITERATION_LIMIT


def test_report_to_dict():
    report = trace_pc(instance(_scalar(2.0)))
    doc = report.to_dict()
    assert set(doc) == {"status", "x", "lambda", "residual", "iters", "restarts"}
    assert doc["status"] == "Accepted"
    assert doc["x"] == [float(report.x_final[0])]


def test_config_validation():
    with pytest.raises(ValueError):
        TracerConfig(eps1=0.0)
    with pytest.raises(ValueError):
        TracerConfig(eps1=1e-9, eps2=1e-10)
    with pytest.raises(ValueError):
        TracerConfig(kappa1=0.5)
    cfg = TracerConfig().with_overrides(c0=7, eps1=None)
    assert cfg.c0 == 7 and cfg.eps1 == TracerConfig().eps1


def test_lambda_helpers():
    inst = instance(_scalar(2.0))
    assert np.allclose(recover_lambda(inst, inst.x0), 1.0)
    assert admissible_lambda(np.array([1.0 + 1e-13, 0.5]), 1e-16).tolist() == [1.0, 0.5]
    assert admissible_lambda(np.array([1.1]), 1e-16) is None
    assert admissible_lambda(np.array([-1e-3]), 1e-16) is None
    assert lambda_to_t(np.array([0.0, 1.0]), T_MAX).tolist() == [T_MAX, 0.0]


@pytest.mark.parametrize("name", ["scalar", "oligopoly"])
def test_tangent_at_start(name):
    p = _scalar(2.0) if name == "scalar" else get_builtin("cournot-murphy5")
    inst = instance(p)
    start = PathPoint.start(inst)
    mu = tangent(inst, start)
    assert abs(np.linalg.norm(mu) - 1.0) <= 1e-12
    jh = np.hstack([jacobian_psi(inst.sys, inst.x0), dH_dlambda(inst)])
    assert np.max(np.abs(jh @ mu)) <= 1e-9 * np.max(np.abs(jh))
    assert np.all(mu[p.n:] < 0)
    assert tangent(inst, start, prev=-mu) @ mu < 0


@pytest.mark.parametrize("a", [0.5, 2.0, 5.0])
def test_ode_scalar_agrees(a):
    p = _scalar(a)
    ode = trace_ode(instance(p))
    pc = trace_pc(instance(p))
    assert ode.status in (Status.ACCEPTED, Status.PROBABLE)
    assert abs(ode.x_final[0] - pc.x_final[0]) <= 1e-4
    assert check_ncp_residual(p, ode.x_final)[0] <= 1e-5


def test_ode_oligopoly():
    p = get_builtin("cournot-murphy5")
    ode = trace_ode(instance(p))
    assert ode.status in (Status.ACCEPTED, Status.PROBABLE)
    assert np.max(np.abs(ode.x_final - MURPHY5_SOLUTION)) <= 1e-3
    assert check_ncp_residual(p, ode.x_final)[0] <= 1e-5


@pytest.mark.parametrize("seed", range(6))
def test_ode_synth_endpoint(seed):
    p, z = synth_solution_instance(1 + seed % 4, seed)
    report = trace_ode(instance(p))
    _coherent(p, report)
    if report.status in (Status.ACCEPTED, Status.PROBABLE):
        assert check_ncp_residual(p, report.x_final)[0] <= 1e-5
