"""
Utility surplus as one investor becomes risk neutral
====================================================

Raise the first investor's risk tolerance along a ladder. In the
competitive equilibrium its surplus from trading vanishes; in the Nash
equilibrium it converges to a closed-form integral that depends only on
the other investors and the noise traders.
"""
from __future__ import annotations

from impacteq import ScenarioConfig
from impacteq.config import TEMPLATE
from impacteq.report import sweep

config = ScenarioConfig.loads(TEMPLATE)
result = sweep(config, "Delta1", [10.0 ** p for p in range(1, 7)])
cols = result.columns
print(f"{'delta_1':>9}  {'competitive':>12}  {'Nash':>12}  {'limit':>12}  {'rel gap':>9}")
for row in result.rows:
    get = dict(zip(cols, row))
    print(f"{get['delta_1']:9.0e}  {get['competitive_surplus']:12.4e}  {get['nash_surplus']:12.4e}  "
          f"{get['nash_surplus_limit']:12.4e}  {get['nash_relative_gap_to_limit']:9.1e}")
print("log-log slope of competitive surplus:", round(result.slopes["competitive_surplus_vs_delta_1"], 3))
