"""
Frictionless equilibria: competitive, best response and Nash
=============================================================

Three investors hedge endowment exposures in two assets while noise
traders buy along a polynomial schedule. We compare competitive returns,
returns when one investor internalises its price impact, and the Nash
returns when everyone does, then decompose the gap into the liquidity
premium.
"""
from __future__ import annotations

import numpy as np

from impacteq import (
    OU,
    Constant,
    Deterministic,
    InvestorSet,
    MarketParams,
    NoiseSpec,
    Scenario,
    TimeGrid,
    best_response_demand,
    best_response_returns,
    competitive_demands,
    competitive_returns,
    liquidity_premium,
    nash_demands,
    nash_returns,
    revealed_exposure,
)
from impacteq.oracle import verify_clearing
from impacteq.frictionless import frictionless_nash

market = MarketParams(covariance=[[0.04, 0.01], [0.01, 0.09]], cost=[0.1, 0.2],
                      discount_rate=0.02, horizon=1.0)
investors = InvestorSet(
    tolerances=[1.0, 2.0, 4.0],
    exposures=[
        Constant([1.0, 0.5]),
        OU(initial=[0.2, -0.1], mean=[0.0, 0.3], reversion=2.0, scale=0.2),
        Deterministic.polynomial([[0.5, 0.0], [0.0, 1.0]]),
    ],
)
noise = NoiseSpec.polynomial([[1.0, 0.5]], market.horizon)
scn = Scenario(market, investors, noise, TimeGrid(market.horizon, 200), seed=2024)

# Competitive returns price the aggregate exposure net of noise demand.
mu_hat = competitive_returns(scn)
print("competitive returns at t=0, T:", mu_hat.values[0], mu_hat.values[-1])

# Investor 0 best-responds; its demand shrinks by 1/(1 + lambda_0)
# relative to price taking at the competitive returns.
lam0 = investors.relative[0]
phi_br = best_response_demand(scn, 0)
phi_pt = competitive_demands(scn, mu_hat)[0]
print("shrinkage factor:", np.max(np.abs(phi_br.values * (1 + lam0) - phi_pt.values)))
mu_br = best_response_returns(scn, 0)

# What a price taker would infer about investor 0 from its trades.
revealed = revealed_exposure(market, investors.tolerances[0], mu_br, phi_br)
print("revealed vs true exposure at t=0:", revealed.values[0], scn.zeta(0)[0])

# Nash: every investor is strategic.
mu_nash = nash_returns(scn)
demands = nash_demands(scn, mu_nash)
print("Nash clearing violation:", verify_clearing(frictionless_nash(scn), noise).demand_violation)

# The liquidity premium, computed two independent ways.
lp = liquidity_premium(scn)
print("premium sup-norm:", np.abs(lp.direct.values).max(), " two-route gap:", lp.gap)

print("\n   t    competitive   best-resp(0)   Nash   (asset 0)")
for k in range(0, 201, 40):
    print(f"{scn.t[k]:5.2f}  {mu_hat.values[k, 0]:11.6f}  {mu_br.values[k, 0]:11.6f}  "
          f"{mu_nash.values[k, 0]:9.6f}")
