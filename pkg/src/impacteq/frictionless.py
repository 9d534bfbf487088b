"""Frictionless equilibria: competitive, best response under price impact,
revealed exposures, Nash, liquidity premium and utility surplus.

The private ``_*`` formulas are written in the row-vector convention of the
``(K+1, d)`` path arrays and accept either arrays or
:class:`~impacteq.paths.AffineProcess` objects. The frictional module reuses
them symbolically to build tracking targets with exact conditional means.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import GridMismatch
from .model import EquilibriumResult, InvestorSet, MarketParams, Regime
from .paths import PathGrid, check_same_grid
from .scenario import Scenario


# generic closed forms ------------------------------------------------------
def _competitive_returns(sigma, delta, zeta_total, psi):
    return (zeta_total - psi) @ sigma / delta


def _competitive_demand(sigma_inv, delta_m, nu, zeta_m):
    return delta_m * (nu @ sigma_inv) - zeta_m


def _price_impact_returns(sigma, delta_others, zeta_others, psi, phi):
    return (zeta_others - psi - phi) @ sigma / delta_others


def _best_response_demand(lam_n, lam_others, zeta_others, psi, zeta_n):
    return (lam_n * (zeta_others - psi) - lam_others * zeta_n) / (lam_n + 1.0)


def _nash_returns(sigma, investors: InvestorSet, zeta_list, psi):
    lam = investors.relative
    weighted = sum(l * z for l, z in zip(lam, zeta_list))
    total = sum(zeta_list[1:], zeta_list[0])
    return (total - psi - weighted) @ sigma / (investors.total * (1.0 - np.sum(lam ** 2)))


def _nash_demand(sigma_inv, investors: InvestorSet, m, nu, zeta_m):
    lam_m = investors.relative[m]
    d_others = investors.others_total(m)
    return lam_m * d_others * (nu @ sigma_inv) - (d_others / investors.total) * zeta_m


# public operations ---------------------------------------------------------
def competitive_returns(scn: Scenario) -> PathGrid:
    m = scn.market
    return scn.path(_competitive_returns(m.covariance, scn.investors.total,
                                         scn.zeta_total(), scn.psi))


def competitive_demands(scn: Scenario, nu: PathGrid) -> tuple[PathGrid, ...]:
    _check_grid(scn, nu)
    sigma_inv = scn.market.covariance_inv
    return tuple(
        scn.path(_competitive_demand(sigma_inv, scn.investors.tolerances[m], nu.values, scn.zeta(m)))
        for m in range(scn.N)
    )


def price_impact_returns(scn: Scenario, n: int, phi: PathGrid) -> PathGrid:
    scn.investors.check_index(n)
    _check_grid(scn, phi)
    return scn.path(_price_impact_returns(scn.market.covariance, scn.investors.others_total(n),
                                          scn.zeta_others(n), scn.psi, phi.values))


def best_response_demand(scn: Scenario, n: int) -> PathGrid:
    inv = scn.investors
    inv.check_index(n)
    return scn.path(_best_response_demand(inv.relative[n], inv.others_relative(n),
                                          scn.zeta_others(n), scn.psi, scn.zeta(n)))


def others_competitive_returns(scn: Scenario, n: int) -> PathGrid:
    """Competitive returns of the market without investor ``n``."""
    scn.investors.check_index(n)
    return scn.path(_competitive_returns(scn.market.covariance, scn.investors.others_total(n),
                                         scn.zeta_others(n), scn.psi))


def best_response_returns(scn: Scenario, n: int) -> PathGrid:
    lam = scn.investors.relative[n]
    mu_others = others_competitive_returns(scn, n).values
    mu_hat = competitive_returns(scn).values
    return scn.path(lam / (lam + 1.0) * mu_others + mu_hat / (lam + 1.0))


def revealed_exposure(market: MarketParams, tolerance: float, nu: PathGrid,
                      phi: PathGrid) -> PathGrid:
    """Exposure implied by inverting the price-taking demand at ``(nu, phi)``."""
    check_same_grid(nu, phi)
    return PathGrid(nu.grid, tolerance * (nu.values @ market.covariance_inv) - phi.values)


def best_response_revealed_exposure(scn: Scenario, n: int) -> PathGrid:
    """Closed form of the revealed exposure at the best-response pair."""
    lam = scn.investors.relative[n]
    zo = scn.zeta_others(n)
    return scn.path(lam ** 2 / (1.0 - lam ** 2) * (zo - scn.psi) + scn.zeta(n) / (1.0 + lam))


def nash_returns(scn: Scenario) -> PathGrid:
    zetas = [scn.zeta(m) for m in range(scn.N)]
    return scn.path(_nash_returns(scn.market.covariance, scn.investors, zetas, scn.psi))


def nash_demands(scn: Scenario, nu: PathGrid) -> tuple[PathGrid, ...]:
    _check_grid(scn, nu)
    sigma_inv = scn.market.covariance_inv
    return tuple(scn.path(_nash_demand(sigma_inv, scn.investors, m, nu.values, scn.zeta(m)))
                 for m in range(scn.N))


@dataclass(frozen=True, eq=False)
class LiquidityPremium:
    """Nash minus competitive returns, computed two ways."""

    direct: PathGrid
    from_demands: PathGrid

    @property
    def gap(self) -> float:
        return float(np.max(np.abs(self.direct.values - self.from_demands.values)))


def liquidity_premium(scn: Scenario) -> LiquidityPremium:
    mu_hat = competitive_returns(scn)
    direct = nash_returns(scn).values - mu_hat.values
    lam = scn.investors.relative
    demands = competitive_demands(scn, mu_hat)
    weighted = sum(l * p.values for l, p in zip(lam, demands))
    rhs = weighted @ scn.market.covariance / (scn.investors.total * (1.0 - np.sum(lam ** 2)))
    return LiquidityPremium(scn.path(direct), scn.path(rhs))


# utility surplus -----------------------------------------------------------
def utility_surplus(market: MarketParams, tolerance: float, zeta_m: PathGrid,
                    nu: PathGrid, phi: PathGrid) -> float:
    """Objective gain of ``phi`` over the zero strategy along one path,
    integrated by the trapezoid rule."""
    grid = check_same_grid(zeta_m, nu, phi)
    sigma = market.covariance
    p, z = phi.values, zeta_m.values
    integrand = (np.einsum("ki,ki->k", p, nu.values)
                 - np.einsum("ki,ij,kj->k", p, sigma, p + 2.0 * z) / (2.0 * tolerance))
    return float(trapezoid(np.exp(-market.discount_rate * grid.nodes) * integrand, grid.nodes))


def nash_surplus_limit(scn: Scenario, n: int = 0) -> float:
    """Surplus of investor ``n`` in the Nash equilibrium as its tolerance grows
    without bound."""
    x = scn.zeta_others(n) - scn.psi
    integrand = np.einsum("ki,ij,kj->k", x, scn.market.covariance, x)
    weight = np.exp(-scn.market.discount_rate * scn.t) / (4.0 * scn.investors.others_total(n))
    return float(trapezoid(weight * integrand, scn.t))


@dataclass(frozen=True)
class SurplusReport:
    """Per-investor surplus. ``std_error`` is ``None`` for a single path."""

    regime: Regime
    surplus: tuple[float, ...]
    std_error: tuple[float, ...] | None
    num_steps: int
    num_paths: int


def _surplus_one(scn: Scenario, regime: Regime) -> np.ndarray:
    if regime is Regime.FRICTIONLESS_COMPETITIVE:
        nu = competitive_returns(scn)
        demands = competitive_demands(scn, nu)
    elif regime is Regime.FRICTIONLESS_NASH:
        nu = nash_returns(scn)
        demands = nash_demands(scn, nu)
    else:
        raise ValueError(f"surplus is defined here for frictionless regimes, not {regime}")
    return np.array([
        utility_surplus(scn.market, scn.investors.tolerances[m], scn.exposure_paths[m], nu, demands[m])
        for m in range(scn.N)
    ])


def surplus_report(scn: Scenario, regime: Regime, num_paths: int = 1) -> SurplusReport:
    """Per-investor surplus. With stochastic exposures and ``num_paths > 1``
    it is a Monte Carlo mean over independent child seeds, reported with its
    standard error; otherwise it is evaluated on the scenario's own path."""
    if not scn.stochastic or num_paths <= 1:
        values = _surplus_one(scn, regime)
        return SurplusReport(regime, tuple(values.tolist()), None, scn.grid.num_steps, 1)
    samples = np.array([_surplus_one(scn.replace(seed=s), regime)
                        for s in scn.sample_seeds(num_paths)])
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(num_paths)
    return SurplusReport(regime, tuple(mean.tolist()), tuple(se.tolist()),
                         scn.grid.num_steps, num_paths)


# regimes -------------------------------------------------------------------
def frictionless_competitive(scn: Scenario) -> EquilibriumResult:
    nu = competitive_returns(scn)
    return EquilibriumResult(Regime.FRICTIONLESS_COMPETITIVE, nu, competitive_demands(scn, nu))


def frictionless_nash(scn: Scenario) -> EquilibriumResult:
    nu = nash_returns(scn)
    return EquilibriumResult(Regime.FRICTIONLESS_NASH, nu, nash_demands(scn, nu))


def _check_grid(scn: Scenario, path: PathGrid) -> None:
    if path.grid != scn.grid:
        raise GridMismatch(f"path grid {path.grid} differs from scenario grid {scn.grid}")
