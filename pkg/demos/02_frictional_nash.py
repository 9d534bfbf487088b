"""
Frictional Nash equilibrium and the friction premium
====================================================

With quadratic trading costs the investors trade smoothly toward a moving
target. Equal risk tolerances give a closed form for returns; demands come
from a coupled linear forward-backward system solved spectrally. We check
clearing of demands and trading rates, then show the friction premium is
linear in the cost matrix and shrinks like 2/(N(N-1)) with the number of
investors.
"""
from __future__ import annotations

import numpy as np

from impacteq import (
    Constant,
    Deterministic,
    InvestorSet,
    MarketParams,
    NoiseSpec,
    Scenario,
    TimeGrid,
    frictional_nash,
    nash_returns,
)
from impacteq.frictional import friction_premium_coefficient
from impacteq.oracle import verify_clearing

market = MarketParams([[0.04, 0.01], [0.01, 0.09]], [0.1, 0.2], discount_rate=0.05)
exposures = [Constant([1.0, 0.5]), Deterministic.polynomial([[0.5, 0.0], [0.0, 1.0]]),
             Constant([-0.3, 0.2])]
noise = NoiseSpec.polynomial([[1.0, 0.5], [0.5, -0.5]], market.horizon)
scn = Scenario(market, InvestorSet([2.0, 2.0, 2.0], exposures), noise, TimeGrid(1.0, 400))

res = frictional_nash(scn)
rep = verify_clearing(res, noise)
print(f"clearing: demands {rep.demand_violation:.1e}, rates {rep.rate_violation:.1e}")
print("initial demands:", [float(np.abs(p.values[0]).max()) for p in res.demands])
print("terminal rates: ", [float(np.abs(v.values[-1]).max()) for v in res.rates])

print("\n   t    phi_0[0]    phi_1[0]    phi_2[0]   rate_0[0]")
for k in range(0, 401, 80):
    print(f"{scn.t[k]:5.2f}  " + "  ".join(f"{p.values[k, 0]:9.5f}" for p in res.demands)
          + f"  {res.rates[0].values[k, 0]:9.5f}")

# Friction premium: frictional minus frictionless Nash returns.
print("\ncost scale   premium sup-norm")
for eps in (1.0, 0.1, 0.01):
    s = scn.replace(market=market.scaled_cost(eps))
    premium = frictional_nash(s).returns.values - nash_returns(s).values
    print(f"{eps:10.2f}   {np.abs(premium).max():.6e}")

print("\n N   coefficient 2/(N(N-1))")
for N in range(2, 9):
    print(f"{N:2d}   {friction_premium_coefficient(N):.6f}")
