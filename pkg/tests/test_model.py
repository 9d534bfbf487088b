from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from impacteq.errors import (
    BadDimension,
    BadIndex,
    InadmissibleNoise,
    NonDiagonalCost,
    NonSPDCovariance,
)
from impacteq.model import InvestorSet, MarketParams, Regime, aggregate, validate_market
from impacteq.paths import OU, Constant, NoiseSpec, Sum, TimeGrid, realize

tolerance_lists = st.lists(st.floats(0.01, 1e4), min_size=2, max_size=8)


def test_valid_scalar_market():
    market = MarketParams([[0.04]], [[0.1]], 0.0, 1.0)
    investors = InvestorSet([1.0, 1.0], [Constant([1.0]), Constant([1.0])])
    report = validate_market(market, investors, NoiseSpec.none(1), frictional=True)
    assert report.num_investors == 2
    assert report.min_covariance_eigenvalue == pytest.approx(0.04)


def test_indefinite_covariance_rejected():
    market = MarketParams([[0.04, 0.05], [0.05, 0.04]], [0.1, 0.1])
    investors = InvestorSet([1.0, 1.0], [Constant([1.0, 0.0])] * 2)
    with pytest.raises(NonSPDCovariance):
        validate_market(market, investors)


def test_asymmetric_covariance_rejected():
    market = MarketParams([[0.04, 0.01], [0.0, 0.04]], [0.1, 0.1])
    with pytest.raises(NonSPDCovariance):
        validate_market(market, InvestorSet([1.0, 1.0], [Constant([1.0, 0.0])] * 2))


def test_constant_noise_rate_inadmissible_for_frictional():
    one = lambda t: np.ones((np.size(t), 1))
    zero = lambda t: np.zeros((np.size(t), 1))
    noise = NoiseSpec(one, zero, lambda t: np.reshape(t, (-1, 1)), 1)
    market = MarketParams([[0.04]], [0.1])
    investors = InvestorSet([1.0, 1.0], [Constant([1.0])] * 2)
    validate_market(market, investors, noise, frictional=False)
    with pytest.raises(InadmissibleNoise):
        validate_market(market, investors, noise, frictional=True)


def test_cost_must_be_diagonal_and_positive():
    investors = InvestorSet([1.0, 1.0], [Constant([1.0, 0.0])] * 2)
    with pytest.raises(NonDiagonalCost):
        validate_market(MarketParams(np.eye(2) * 0.04, [[0.1, 0.01], [0.01, 0.1]]), investors)
    with pytest.raises(NonDiagonalCost):
        validate_market(MarketParams(np.eye(2) * 0.04, [0.1, 0.0]), investors)


def test_dimension_errors():
    market = MarketParams(np.eye(2) * 0.04, [0.1, 0.1])
    with pytest.raises(BadDimension):
        validate_market(market, InvestorSet([1.0, 1.0], [Constant([1.0])] * 2))
    with pytest.raises(BadDimension):
        validate_market(market, InvestorSet([1.0], [Constant([1.0, 1.0])]))
    with pytest.raises(BadDimension):
        MarketParams(np.eye(2), [0.1, 0.1, 0.1])


def test_aggregate_arithmetic():
    investors = InvestorSet([1.0, 1.0, 2.0], [Constant([0.5])] * 3)
    delta, lam, zeta = aggregate(investors)
    assert delta == 4.0
    np.testing.assert_array_equal(lam, [0.25, 0.25, 0.5])
    path = realize(zeta, TimeGrid(1.0, 10))
    np.testing.assert_allclose(path.values, 1.5)


def test_aggregate_sum_evaluates_pointwise():
    grid = TimeGrid(1.0, 50)
    ou = OU([1.0], [0.0], 2.0, 0.3)
    investors = InvestorSet([2.0, 3.0], [ou, Constant([0.7])])
    _, _, zeta = aggregate(investors)
    assert isinstance(zeta, Sum)
    total = realize(zeta, grid, seed=3)
    alone = realize(ou, grid, seed=3)
    np.testing.assert_allclose(total.values, alone.values + 0.7, atol=1e-15)


@given(tolerance_lists)
def test_relative_tolerances_sum_to_one(tol):
    inv = InvestorSet(tol, [Constant([0.0])] * len(tol))
    assert abs(inv.relative.sum() - 1.0) <= 1e-14
    for m in range(inv.size):
        assert inv.others_relative(m) == pytest.approx(1.0 - inv.relative[m], abs=1e-14)


@given(tolerance_lists)
def test_curvature_identity(tol):
    inv = InvestorSet(tol, [Constant([0.0])] * len(tol))
    for m in range(inv.size):
        lhs = inv.others_total(m) * inv.curvature(m)
        rhs = (inv.tolerances[m] + inv.total) / inv.tolerances[m]
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_bad_index():
    inv = InvestorSet([1.0, 1.0], [Constant([0.0])] * 2)
    with pytest.raises(BadIndex):
        inv.others_total(2)


def test_market_is_immutable():
    market = MarketParams([[0.04]], [0.1])
    with pytest.raises(ValueError):
        market.covariance[0, 0] = 1.0
    with pytest.raises(AttributeError):
        market.horizon = 2.0


def test_regime_flags():
    assert not Regime.FRICTIONLESS_NASH.frictional
    assert Regime.FRICTIONAL_NASH.frictional
    assert Regime("FrictionalNashTwoInvestor") is Regime.FRICTIONAL_NASH_TWO_INVESTOR
