"""
Brute-force oracles for the closed forms
========================================

Each closed form has an independent numerical route:

* Nash returns by simultaneous best-response iteration and by a bordered
  linear solve at every node;
* the frictional best response by a discretised concave quadratic program,
  solved exactly with a block-tridiagonal Cholesky factorisation.

We print the agreement and the observed convergence order of the QP.
"""
from __future__ import annotations

import numpy as np

from impacteq import frictional_best_response, nash_returns
from impacteq.oracle import nash_fixed_point, nash_linear_solve, scenario_battery, solve_frictional_qp

battery = scenario_battery(20)
worst_fp = worst_lin = 0.0
for scn in battery:
    nu = nash_returns(scn).values
    fp = nash_fixed_point(scn)
    lin, _ = nash_linear_solve(scn)
    worst_fp = max(worst_fp, np.abs(fp.returns.values - nu).max())
    worst_lin = max(worst_lin, np.abs(lin.values - nu).max())
print(f"Nash over {len(battery)} scenarios: fixed point {worst_fp:.1e}, linear solve {worst_lin:.1e}")

scn = next(s for s in scenario_battery(6, seed=5, deterministic=True) if s.investors.equal_tolerances)
print("\n   K    rel. error")
errors = []
for K in (50, 100, 200, 400, 800):
    s = scn.with_grid(K)
    phi, _ = frictional_best_response(s, 0)
    qp = solve_frictional_qp(s, 0)
    errors.append(np.abs(qp.demand.values - phi.values).max() / np.abs(phi.values).max())
    print(f"{K:5d}   {errors[-1]:.3e}")
print("observed orders:", np.round(-np.diff(np.log2(errors)), 2))
