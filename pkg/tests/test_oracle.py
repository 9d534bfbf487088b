from __future__ import annotations

import numpy as np
import pytest

from impacteq import frictional as fr
from impacteq import frictionless as fl
from impacteq import oracle
from impacteq.errors import NoConvergence
from impacteq.model import EquilibriumResult, InvestorSet
from impacteq.paths import Constant, NoiseSpec

from conftest import make_scenario


def test_pointwise_best_response_matches_closed_form(stochastic_scenario):
    scn = stochastic_scenario
    for n in range(scn.N):
        np.testing.assert_allclose(oracle.solve_frictionless_best_response_pointwise(scn, n).values,
                                   fl.best_response_demand(scn, n).values, atol=1e-12)


def test_pointwise_zero_linear_term():
    scn = make_scenario(exposures=[Constant([0.0]), Constant([0.0])])
    assert not oracle.solve_frictionless_best_response_pointwise(scn, 0).values.any()


def test_pointwise_invariant_under_tolerance_rescaling(deterministic_scenario):
    # halving every tolerance doubles both the curvature and the linear term
    scn = deterministic_scenario
    half = scn.replace(investors=InvestorSet(scn.investors.tolerances / 2.0,
                                             scn.investors.exposures))
    np.testing.assert_allclose(oracle.solve_frictionless_best_response_pointwise(half, 0).values,
                               oracle.solve_frictionless_best_response_pointwise(scn, 0).values,
                               atol=1e-13)


def test_fixed_point_two_investors():
    scn = make_scenario(exposures=[Constant([0.5]), Constant([-1.0])],
                        noise=NoiseSpec.polynomial([[0.4]], 1.0))
    fp = oracle.nash_fixed_point(scn, tol=1e-9)
    np.testing.assert_allclose(fp.returns.values, fl.nash_returns(scn).values, atol=1e-8)
    assert 0.0 < fp.contraction_ratio < 1.0


def test_fixed_point_zero_scenario_one_iteration():
    scn = make_scenario(exposures=[Constant([0.0]), Constant([0.0])])
    fp = oracle.nash_fixed_point(scn)
    assert fp.iterations == 1
    assert not fp.returns.values.any()


def test_fixed_point_sequential_variant(stochastic_scenario):
    scn = stochastic_scenario
    a = oracle.nash_fixed_point(scn, tol=1e-12)
    b = oracle.nash_fixed_point(scn, tol=1e-12, sequential=True)
    np.testing.assert_allclose(a.returns.values, b.returns.values, atol=1e-10)
    assert b.iterations <= a.iterations


def test_no_convergence_reports_ratio(stochastic_scenario):
    with pytest.raises(NoConvergence) as info:
        oracle.nash_fixed_point(stochastic_scenario, max_iters=3)
    assert info.value.iterations == 3
    assert 0.0 < info.value.contraction_ratio < 1.0
    with pytest.raises(NoConvergence):
        oracle.nash_fixed_point(stochastic_scenario, max_iters=1)


def test_linear_solve_agrees_with_fixed_point(stochastic_scenario):
    scn = stochastic_scenario
    nu, demands = oracle.nash_linear_solve(scn)
    fp = oracle.nash_fixed_point(scn, tol=1e-13)
    np.testing.assert_allclose(nu.values, fp.returns.values, atol=1e-10)
    for a, b in zip(demands, fp.demands):
        np.testing.assert_allclose(a.values, b.values, atol=1e-10)


def test_block_tridiagonal_solver_matches_dense(rng):
    K, d = 7, 3
    diag = np.empty((K, d, d))
    upper = rng.normal(size=(K - 1, d, d)) * 0.3
    for k in range(K):
        A = rng.normal(size=(d, d))
        diag[k] = A @ A.T + 3.0 * np.eye(d)
    rhs = rng.normal(size=(K, d))
    dense = np.zeros((K * d, K * d))
    for k in range(K):
        dense[k * d:(k + 1) * d, k * d:(k + 1) * d] = diag[k]
        if k < K - 1:
            dense[k * d:(k + 1) * d, (k + 1) * d:(k + 2) * d] = upper[k]
            dense[(k + 1) * d:(k + 2) * d, k * d:(k + 1) * d] = upper[k].T
    expected = np.linalg.solve(dense, rhs.ravel()).reshape(K, d)
    np.testing.assert_allclose(oracle._block_tridiagonal_solve(diag, upper, rhs), expected, atol=1e-13)


def test_qp_zero_target():
    scn = make_scenario(tolerances=(1.0, 1.0, 1.0), exposures=[Constant([0.0])] * 3)
    qp = oracle.solve_frictional_qp(scn, 0)
    assert not qp.demand.values.any()


def test_qp_scalar_constant_target_tracks_explicit_solution():
    scn = make_scenario(tolerances=(1.0, 1.0), exposures=[Constant([0.0]), Constant([2.0])], K=200)
    phi, _ = fr.frictional_best_response(scn, 0)
    qp = oracle.solve_frictional_qp(scn, 0)
    assert np.abs(qp.demand.values - phi.values).max() <= 0.02 * np.abs(phi.values).max()
    assert qp.terminal_rate <= 0.05 * np.abs(phi.values).max()


def test_verify_clearing_passes_and_detects_corruption(stochastic_scenario):
    scn = stochastic_scenario
    res = fr.frictional_nash(scn)
    assert oracle.verify_clearing(res, scn.noise).passed
    zeroed = (scn.path(np.zeros_like(res.demands[0].values)),) + res.demands[1:]
    bad = EquilibriumResult(res.regime, res.returns, zeroed, res.rates)
    rep = oracle.verify_clearing(bad, scn.noise)
    assert not rep.passed
    assert rep.demand_violation == pytest.approx(np.abs(res.demands[0].values).max(), rel=1e-12)
    eps = 1e-3
    shifted = NoiseSpec(scn.noise.rate, scn.noise.drift,
                        lambda t: scn.noise.level_at(t) + eps, scn.d)
    rep = oracle.verify_clearing(res, shifted)
    assert rep.demand_violation == pytest.approx(eps, rel=1e-9)
    assert not rep.passed


def test_battery_composition():
    battery = oracle.scenario_battery(50)
    assert len(battery) == 50
    assert {s.d for s in battery} <= {1, 2, 3}
    assert {s.N for s in battery} == {2, 3, 4, 5}
    assert any(s.N == 2 and not s.investors.equal_tolerances for s in battery)
    assert any(s.stochastic for s in battery)
    assert all(not s for s in (x.stochastic for x in oracle.scenario_battery(10, deterministic=True)))


def test_contraction_ratio_below_one_on_battery():
    for scn in oracle.scenario_battery(20):
        assert oracle.nash_fixed_point(scn).contraction_ratio < 1.0
