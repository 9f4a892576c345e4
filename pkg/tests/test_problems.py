import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncp_homotopy.exceptions import DomainError
from ncp_homotopy.numerics import fd_jacobian
from ncp_homotopy.problems import (
    MURPHY5,
    MURPHY5_SOLUTION,
    SEED_ENV,
    TABLE1_PRINTED,
    LcpData,
    OligopolyParams,
    builtin_names,
    cournot_f,
    cournot_jf,
    cournot_problem,
    default_seed,
    diag_dominant_matrix,
    get_builtin,
    lcp_as_ncp,
    marginal_cost,
    random_lcp,
    register_problem,
    synth_solution_instance,
)
from ncp_homotopy.reformulate import NcpProblem, ReformulatedSystem, check_ncp_residual, eval_psi, psi_scale
from ncp_homotopy.reformulate import relative_error


def test_reported_equilibrium_is_a_zero_of_f():
    assert np.max(np.abs(cournot_f(MURPHY5, MURPHY5_SOLUTION))) <= 1e-3


def test_printed_table_does_not_reproduce_the_reported_equilibrium():
    # documents the beta_4, beta_5 discrepancy (see the decisions ledger)
    assert np.max(np.abs(cournot_f(TABLE1_PRINTED, MURPHY5_SOLUTION))) > 10.0


def test_marginal_cost_firm3():
    assert marginal_cost(MURPHY5, np.ones(5))[2] == pytest.approx(11.0, rel=1e-15)


def test_single_firm_closed_form():
    p = OligopolyParams((0.0,), (1.0,), (1.0,))
    q = np.array([3.0])
    price = 5000 ** (1 / 1.1) * 3.0 ** (-1 / 1.1)
    dprice = -(1 / 1.1) * price / 3.0
    assert cournot_f(p, q)[0] == pytest.approx(3.0 - price - 3.0 * dprice, rel=1e-13)
    # d/dQ [Q - P - Q P'] = 1 - 2 P' - Q P''
    d2price = (1 / 1.1) * (1 / 1.1 + 1) * price / 9.0
    assert cournot_jf(p, q)[0, 0] == pytest.approx(1.0 - 2 * dprice - 3.0 * d2price, rel=1e-12)


@pytest.mark.parametrize("params", [MURPHY5, TABLE1_PRINTED])
def test_cournot_jacobian_matches_finite_differences(params):
    q = np.ones(5)
    assert relative_error(cournot_jf(params, q), fd_jacobian(lambda z: cournot_f(params, z), q)) <= 1e-5


def test_cournot_jacobian_off_diagonal_rows_constant():
    jac = cournot_jf(MURPHY5, np.array([3.0, 1.0, 4.0, 1.5, 9.0]))
    for i in range(5):
        off = np.delete(jac[i], i)
        assert np.allclose(off, off[0], rtol=1e-14)


def test_cournot_domain():
    with pytest.raises(DomainError):
        cournot_f(MURPHY5, np.zeros(5))
    with pytest.raises(DomainError):
        cournot_jf(MURPHY5, np.array([1.0, 1.0, -1.0, 1.0, 1.0]))
    assert not cournot_problem(MURPHY5).in_domain(np.zeros(5))


def test_oligopoly_params_validation():
    with pytest.raises(ValueError):
        OligopolyParams((1.0,), (1.0, 2.0), (1.0,))
    with pytest.raises(ValueError):
        OligopolyParams((1.0,), (0.0,), (1.0,))
    with pytest.raises(ValueError):
        OligopolyParams((-1.0,), (1.0,), (1.0,))
    with pytest.raises(ValueError):
        OligopolyParams((1.0,), (1.0,), (1.0,), demand_elasticity=1.0)
    assert MURPHY5.subset(2).n_firms == 2


@given(st.lists(st.floats(0.1, 50.0), min_size=5, max_size=5), st.integers(0, 4), st.floats(1e-3, 10.0))
def test_cournot_f_increasing_per_coordinate(q, i, bump):
    q = np.array(q)
    q2 = q.copy()
    q2[i] += bump
    for params in (MURPHY5, TABLE1_PRINTED):
        assert cournot_f(params, q2)[i] - cournot_f(params, q)[i] >= -1e-10


def test_marginal_cost_nondecreasing():
    grid = np.linspace(1e-6, 100.0, 2001)
    for params in (MURPHY5, TABLE1_PRINTED):
        mc = np.array([marginal_cost(params, np.full(5, g)) for g in grid])
        assert np.all(np.diff(mc, axis=0) >= 0.0)


def test_lcp_examples():
    p = lcp_as_ncp(LcpData(np.eye(3), -np.ones(3)))
    assert check_ncp_residual(p, np.ones(3)) == (0.0, True)
    p = lcp_as_ncp(LcpData(np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([-1.0, -1.0])))
    assert check_ncp_residual(p, np.full(2, 1 / 3))[0] <= 1e-15
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 4))
    p = lcp_as_ncp(LcpData(m, rng.uniform(0, 1, 4)))
    assert check_ncp_residual(p, np.zeros(4)) == (0.0, True)
    assert np.array_equal(p.jf(np.ones(4)), m)


def test_lcp_data_validation():
    with pytest.raises(ValueError):
        LcpData(np.eye(2), np.ones(3))


def test_diag_dominant_matrix(rng):
    m = diag_dominant_matrix(6, rng)
    off = np.sum(np.abs(m), axis=1) - np.abs(np.diag(m))
    assert np.all(np.diag(m) > off)
    assert random_lcp(4, 9).n == 4
    assert np.array_equal(random_lcp(4, 9).M, random_lcp(4, 9).M)


@pytest.mark.parametrize("seed", range(40))
def test_synth_instance_properties(seed):
    n = 1 + seed % 8
    p, z = synth_solution_instance(n, seed)
    res, feas = check_ncp_residual(p, z)
    assert res <= 1e-10 and feas
    assert np.all(z + p.f(z) > 0)
    sys = ReformulatedSystem(p)
    assert np.max(np.abs(eval_psi(sys, z))) <= 1e-9 * psi_scale(sys, z)


def test_synth_rejects_bad_n():
    with pytest.raises(ValueError):
        synth_solution_instance(0, 1)


def test_registry():
    assert {"cournot-murphy5", "cournot-table1"} <= set(builtin_names())
    assert get_builtin("cournot-murphy5").n == 5
    with pytest.raises(KeyError):
        get_builtin("nope")
    bad = lambda: NcpProblem(1, lambda z: z ** 2, lambda z: np.eye(1), sample_domain=lambda r: r.uniform(1, 2, 1))
    with pytest.raises(ValueError):
        register_problem("bad", bad)
    assert "bad" not in builtin_names()


def test_default_seed(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert default_seed(4) == 4
    monkeypatch.setenv(SEED_ENV, "17")
    assert default_seed() == 17
