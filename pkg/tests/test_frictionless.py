from __future__ import annotations

import numpy as np
import pytest

from impacteq import frictionless as fl
from impacteq import oracle
from impacteq.errors import BadIndex, GridMismatch
from impacteq.model import InvestorSet, Regime
from impacteq.paths import Constant, Deterministic, NoiseSpec, PathGrid, TimeGrid

from conftest import make_scenario


def two_investor_example(**kw):
    """d=1, Sigma=0.04, delta=(1,1), zeta_1=0, zeta_2=3, no noise."""
    return make_scenario(exposures=[Constant([0.0]), Constant([3.0])], **kw)


def test_competitive_returns_hand_value():
    scn = make_scenario(exposures=[Constant([1.0]), Constant([1.0])])
    np.testing.assert_allclose(fl.competitive_returns(scn).values, 0.04, rtol=1e-15)


def test_competitive_returns_vanish_when_exposure_matches_noise():
    T = 1.0
    noise = NoiseSpec.polynomial([[0.8]], T)
    level = lambda t: noise.level_at(t)
    ex = [Deterministic(lambda t: 0.5 * level(t), 1), Deterministic(lambda t: 0.5 * level(t), 1)]
    scn = make_scenario(exposures=ex, noise=noise)
    np.testing.assert_allclose(fl.competitive_returns(scn).values, 0.0, atol=1e-16)


def test_competitive_demands_hand_values():
    scn = make_scenario(exposures=[Constant([1.0]), Constant([1.0])])
    nu = fl.competitive_returns(scn)
    for p in fl.competitive_demands(scn, nu):
        np.testing.assert_allclose(p.values, 0.0, atol=1e-15)
    zero = scn.path(np.zeros((len(scn.grid), 1)))
    for m, p in enumerate(fl.competitive_demands(scn, zero)):
        np.testing.assert_allclose(p.values, -scn.zeta(m))


def test_competitive_demand_linear_in_tolerance():
    scn = make_scenario(exposures=[Constant([0.0]), Constant([0.0])])
    nu = scn.path(np.full((len(scn.grid), 1), 0.02))
    a = fl.competitive_demands(scn, nu)[0].values
    big = scn.replace(investors=scn.investors.with_tolerance(0, 10.0))
    b = fl.competitive_demands(big, nu)[0].values
    np.testing.assert_allclose(b, 10.0 * a)


def test_price_impact_returns_at_zero_demand():
    scn = two_investor_example()
    zero = scn.path(np.zeros((len(scn.grid), 1)))
    np.testing.assert_allclose(fl.price_impact_returns(scn, 0, zero).values,
                               fl.others_competitive_returns(scn, 0).values)
    np.testing.assert_allclose(fl.others_competitive_returns(scn, 0).values, 0.12)


def test_best_response_demand_hand_value():
    scn = two_investor_example()
    np.testing.assert_allclose(fl.best_response_demand(scn, 0).values, 1.0, rtol=1e-15)


def test_best_response_zero_when_exposures_balance():
    # lambda_n (zeta_-n - psi) = (1 - lambda_n) zeta_n with lambda = (1/4, 3/4)
    scn = make_scenario(tolerances=(1.0, 3.0), exposures=[Constant([1.0]), Constant([3.0])])
    np.testing.assert_allclose(fl.best_response_demand(scn, 0).values, 0.0, atol=1e-15)
    nu = fl.competitive_returns(scn)
    np.testing.assert_allclose(fl.competitive_demands(scn, nu)[0].values, 0.0, atol=1e-15)


def test_best_response_zero_without_motive():
    scn = make_scenario(exposures=[Constant([0.0]), Constant([0.0])])
    np.testing.assert_array_equal(fl.best_response_demand(scn, 1).values, 0.0)


def test_best_response_returns_hand_value():
    scn = two_investor_example()
    np.testing.assert_allclose(fl.competitive_returns(scn).values, 0.06)
    np.testing.assert_allclose(fl.best_response_returns(scn, 0).values, 0.08, rtol=1e-14)


def test_best_response_returns_clear_with_best_response(stochastic_scenario):
    scn = stochastic_scenario
    for n in range(scn.N):
        phi = fl.best_response_demand(scn, n)
        np.testing.assert_allclose(fl.best_response_returns(scn, n).values,
                                   fl.price_impact_returns(scn, n, phi).values, atol=1e-14)


def test_best_response_shrinkage_and_segment(stochastic_scenario):
    scn = stochastic_scenario
    for n in range(scn.N):
        lam = scn.investors.relative[n]
        mu_n = fl.best_response_returns(scn, n).values
        competitive = fl.competitive_demands(scn, fl.competitive_returns(scn))[n].values
        np.testing.assert_allclose(fl.best_response_demand(scn, n).values,
                                   competitive / (lam + 1.0), atol=1e-13)
        lo = np.minimum(fl.others_competitive_returns(scn, n).values, fl.competitive_returns(scn).values)
        hi = np.maximum(fl.others_competitive_returns(scn, n).values, fl.competitive_returns(scn).values)
        assert np.all(mu_n >= lo - 1e-15) and np.all(mu_n <= hi + 1e-15)


def test_revealed_exposure_recovers_true_exposure(stochastic_scenario):
    scn = stochastic_scenario
    nu = fl.competitive_returns(scn)
    for m, phi in enumerate(fl.competitive_demands(scn, nu)):
        rev = fl.revealed_exposure(scn.market, scn.investors.tolerances[m], nu, phi)
        np.testing.assert_allclose(rev.values, scn.zeta(m), atol=1e-13)


def test_best_response_revealed_exposure(stochastic_scenario):
    scn = stochastic_scenario
    for n in range(scn.N):
        nu = fl.best_response_returns(scn, n)
        phi = fl.best_response_demand(scn, n)
        rev = fl.revealed_exposure(scn.market, scn.investors.tolerances[n], nu, phi)
        np.testing.assert_allclose(rev.values, fl.best_response_revealed_exposure(scn, n).values,
                                   atol=1e-13)


def test_revealed_shrinkage_when_noise_matches_others():
    grid_T = 1.0
    noise = NoiseSpec.polynomial([[0.6]], grid_T)
    other = Deterministic(lambda t: noise.level_at(t), 1)
    scn = make_scenario(exposures=[Constant([2.0]), other], noise=noise)
    lam = scn.investors.relative[0]
    np.testing.assert_allclose(fl.best_response_revealed_exposure(scn, 0).values,
                               scn.zeta(0) / (1.0 + lam), atol=1e-15)


def test_nash_hand_value_and_equal_tolerance_collapse():
    scn = two_investor_example()
    np.testing.assert_allclose(fl.nash_returns(scn).values, 0.06, rtol=1e-14)
    np.testing.assert_allclose(fl.nash_returns(scn).values, fl.competitive_returns(scn).values)


def test_nash_demands_clear_and_match_fixed_point(stochastic_scenario):
    scn = stochastic_scenario
    nu = fl.nash_returns(scn)
    demands = fl.nash_demands(scn, nu)
    total = sum(p.values for p in demands) + scn.psi
    assert np.abs(total).max() <= 1e-12
    fp = oracle.nash_fixed_point(scn, tol=1e-12)
    for a, b in zip(demands, fp.demands):
        np.testing.assert_allclose(a.values, b.values, atol=1e-10)


def test_nash_zero_scenario():
    scn = make_scenario(exposures=[Constant([0.0]), Constant([0.0])])
    for p in fl.nash_demands(scn, fl.nash_returns(scn)):
        np.testing.assert_array_equal(p.values, 0.0)


def test_premium_zero_when_aggregate_matches_weighted_exposures():
    # lam = (1/3, 2/3): zeta = sum(lam zeta_m) / sum(lam^2) holds for zeta_2 = 2 zeta_1
    scn = make_scenario(tolerances=(1.0, 2.0), exposures=[Constant([1.0]), Constant([2.0])])
    lam = scn.investors.relative
    np.testing.assert_allclose(scn.zeta_total(),
                               (lam[0] * scn.zeta(0) + lam[1] * scn.zeta(1)) / np.sum(lam ** 2))
    np.testing.assert_allclose(fl.liquidity_premium(scn).direct.values, 0.0, atol=1e-16)
    other = make_scenario(tolerances=(1.0, 2.0), exposures=[Constant([1.0]), Constant([2.5])])
    assert np.abs(fl.liquidity_premium(other).direct.values).min() > 1e-4


def test_premium_two_routes_agree(stochastic_scenario, deterministic_scenario):
    for scn in (stochastic_scenario, deterministic_scenario):
        scn = scn.replace(investors=InvestorSet([1.0, 2.5, 4.0], scn.investors.exposures))
        assert fl.liquidity_premium(scn).gap <= 1e-10


def test_returns_scale_with_covariance(stochastic_scenario):
    scn = stochastic_scenario
    scaled = scn.replace(market=scn.market.scaled_covariance(3.0))
    for f in (fl.competitive_returns, fl.nash_returns):
        np.testing.assert_allclose(f(scaled).values, 3.0 * f(scn).values, rtol=1e-13, atol=1e-16)
    np.testing.assert_allclose(fl.liquidity_premium(scaled).direct.values,
                               3.0 * fl.liquidity_premium(scn).direct.values, rtol=1e-12, atol=1e-15)


def test_clearing_of_all_frictionless_constructors(stochastic_scenario):
    scn = stochastic_scenario
    for res in (fl.frictionless_competitive(scn), fl.frictionless_nash(scn)):
        assert oracle.verify_clearing(res, scn.noise, tol=1e-9).passed


def test_utility_surplus_zero_demand():
    scn = two_investor_example()
    zero = scn.path(np.zeros((len(scn.grid), 1)))
    nu = fl.competitive_returns(scn)
    assert fl.utility_surplus(scn.market, 1.0, scn.exposure_paths[0], nu, zero) == 0.0


def test_surplus_report_deterministic_and_monte_carlo(stochastic_scenario, deterministic_scenario):
    rep = fl.surplus_report(deterministic_scenario, Regime.FRICTIONLESS_NASH, num_paths=10)
    assert rep.std_error is None and rep.num_paths == 1
    mc = fl.surplus_report(stochastic_scenario, Regime.FRICTIONLESS_COMPETITIVE, num_paths=8)
    assert mc.num_paths == 8 and len(mc.std_error) == stochastic_scenario.N
    assert all(se > 0 for se in mc.std_error)
    again = fl.surplus_report(stochastic_scenario, Regime.FRICTIONLESS_COMPETITIVE, num_paths=8)
    assert mc == again
    with pytest.raises(ValueError):
        fl.surplus_report(stochastic_scenario, Regime.FRICTIONAL_NASH)


def test_grid_and_index_errors(stochastic_scenario):
    scn = stochastic_scenario
    other = PathGrid(TimeGrid(1.0, 10), np.zeros((11, 2)))
    with pytest.raises(GridMismatch):
        fl.competitive_demands(scn, other)
    with pytest.raises(BadIndex):
        fl.best_response_demand(scn, 5)
