"""Run orchestration: regimes, premia, surpluses, oracle deltas and sweeps.

Every number in a report comes from a library call made here; the command
line layer only formats and writes.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import frictional as fr
from . import frictionless as fl
from . import oracle
from .config import ScenarioConfig
from .errors import BadSweepValue, ValidationError
from .model import EquilibriumResult, InvestorSet, Regime
from .paths import PathGrid
from .scenario import Scenario

SOLVERS = {
    Regime.FRICTIONLESS_COMPETITIVE: lambda scn, n: fl.frictionless_competitive(scn),
    Regime.FRICTIONLESS_NASH: lambda scn, n: fl.frictionless_nash(scn),
    Regime.FRICTIONAL_BEST_RESPONSE: lambda scn, n: fr.frictional_best_response_equilibrium(scn, n),
    Regime.FRICTIONAL_NASH: lambda scn, n: fr.frictional_nash(scn),
    Regime.FRICTIONAL_NASH_TWO_INVESTOR: lambda scn, n: fr.frictional_nash_two_investors(scn),
}


def check_applicable(regime: Regime, scn: Scenario) -> None:
    equal = scn.investors.equal_tolerances
    if regime in (Regime.FRICTIONAL_NASH, Regime.FRICTIONAL_BEST_RESPONSE) and not equal:
        raise ValidationError(f"{regime.value} needs equal risk tolerances")
    if regime is Regime.FRICTIONAL_NASH_TWO_INVESTOR and scn.N != 2:
        raise ValidationError(f"{regime.value} needs exactly two investors")


def solve_regime(regime: Regime, scn: Scenario, strategic: int = 0) -> EquilibriumResult:
    check_applicable(regime, scn)
    return SOLVERS[regime](scn, strategic)


def sup(x) -> float:
    return float(np.max(np.abs(np.asarray(x))))


def max_pairwise_gap(paths: dict[str, PathGrid]) -> float | None:
    if len(paths) < 2:
        return None
    return max(sup(a.values - b.values) for a, b in combinations(paths.values(), 2))


def friction_premium(scn: Scenario) -> PathGrid | None:
    """Frictional minus frictionless Nash returns, when a frictional Nash
    construction applies to the scenario."""
    if scn.investors.equal_tolerances:
        frictional = fr.frictional_nash_returns(scn)
    elif scn.N == 2:
        frictional = fr.frictional_nash_two_investors(scn).returns
    else:
        return None
    return scn.path(frictional.values - fl.nash_returns(scn).values)


def oracle_deltas(scn: Scenario, strategic: int = 0) -> dict:
    nu = fl.nash_returns(scn).values
    fixed = oracle.nash_fixed_point(scn)
    linear, _ = oracle.nash_linear_solve(scn)
    out = {
        "nash_fixed_point_gap": sup(fixed.returns.values - nu),
        "nash_fixed_point_iterations": fixed.iterations,
        "nash_contraction_ratio": fixed.contraction_ratio,
        "nash_linear_solve_gap": sup(linear.values - nu),
        "pointwise_best_response_gap": sup(
            oracle.solve_frictionless_best_response_pointwise(scn, strategic).values
            - fl.best_response_demand(scn, strategic).values),
    }
    if not scn.stochastic and (scn.investors.equal_tolerances or scn.N == 2):
        phi, _ = fr.frictional_best_response(scn, strategic)
        qp = oracle.solve_frictional_qp(scn, strategic)
        scale = max(sup(phi.values), np.finfo(float).tiny)
        out["frictional_qp_relative_gap"] = sup(qp.demand.values - phi.values) / scale
        out["frictional_qp_terminal_rate"] = qp.terminal_rate
    return out


@dataclass
class RunReport:
    results: dict[Regime, EquilibriumResult]
    summary: dict
    paths: dict[str, PathGrid] = field(default_factory=dict)


def run_scenario(config: ScenarioConfig, seed: int | None = None, grid_steps: int | None = None,
                 regimes: list[Regime] | None = None, mc_paths: int | None = None,
                 timing: bool = False) -> RunReport:
    start = time.perf_counter()
    regimes = config.regimes if regimes is None else list(regimes)
    scn = config.scenario(seed=seed, grid_steps=grid_steps,
                          frictional=any(r.frictional for r in regimes))
    strategic = config.run.get("strategic_investor", 0)
    scn.investors.check_index(strategic)
    for r in regimes:
        check_applicable(r, scn)
    mc = config.run.get("mc_paths", 1) if mc_paths is None else mc_paths

    results = {r: solve_regime(r, scn, strategic) for r in regimes}
    paths: dict[str, PathGrid] = {}
    regime_summary = {}
    for r, res in results.items():
        paths[f"returns_{r.value}"] = res.returns
        for m, p in enumerate(res.demands):
            paths[f"demand_{r.value}_{m}"] = p
        clearing = oracle.verify_clearing(res, scn.noise)
        entry = {"max_clearing_violation": clearing.demand_violation}
        if res.rates is not None:
            for m, p in enumerate(res.rates):
                paths[f"rate_{r.value}_{m}"] = p
            entry["max_rate_clearing_violation"] = clearing.rate_violation
            entry["max_terminal_rate"] = max(sup(p.values[-1]) for p in res.rates)
            entry["max_initial_demand"] = max(sup(p.values[0]) for p in res.demands)
        regime_summary[r.value] = entry

    premium = fl.liquidity_premium(scn)
    paths["premium_liquidity"] = premium.direct
    premia = {
        "liquidity_premium_sup": sup(premium.direct.values),
        "liquidity_premium_identity_gap": premium.gap,
        "friction_coefficient": fr.friction_premium_coefficient(scn.N),
    }
    fp = friction_premium(scn)
    if fp is not None:
        paths["premium_friction"] = fp
        premia["friction_premium_sup"] = sup(fp.values)
    competitive_coef = config.run.get("competitive_friction_coefficient")
    if competitive_coef is not None:
        premia["competitive_friction_coefficient"] = competitive_coef
        premia["nash_to_competitive_coefficient_ratio"] = (
            fr.friction_premium_coefficient(scn.N) / competitive_coef)

    surplus = {}
    for r in (Regime.FRICTIONLESS_COMPETITIVE, Regime.FRICTIONLESS_NASH):
        rep = fl.surplus_report(scn, r, num_paths=mc)
        surplus[r.value] = {"mean": list(rep.surplus),
                            "std_error": None if rep.std_error is None else list(rep.std_error),
                            "paths": rep.num_paths}
    surplus["nash_surplus_limit_investor_0"] = fl.nash_surplus_limit(scn, 0)

    returns = {r.value: res.returns for r, res in results.items()}
    summary = {
        "num_assets": scn.d,
        "num_investors": scn.N,
        "grid_steps": scn.grid.num_steps,
        "seed": scn.seed,
        "regimes": regime_summary,
        "max_regime_return_gap": max_pairwise_gap(returns),
        "premia": premia,
        "surplus": surplus,
        "oracle": oracle_deltas(scn, strategic),
    }
    if timing:
        summary["timing_seconds"] = time.perf_counter() - start
    return RunReport(results, summary, paths)


# output ---------------------------------------------------------------------
def format_csv(path: PathGrid) -> str:
    """Long format ``t,asset,value`` with 17 significant digits."""
    lines = ["t,asset,value"]
    t = path.grid.nodes
    for k in range(len(t)):
        for i in range(path.dim):
            lines.append(f"{t[k]:.17g},{i},{path.values[k, i]:.17g}")
    return "\n".join(lines) + "\n"


def format_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report: RunReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, path in sorted(report.paths.items()):
        target = out / f"{name}.csv"
        target.write_text(format_csv(path))
        written.append(target)
    target = out / "summary.json"
    target.write_text(format_json(report.summary))
    written.append(target)
    return written


# sweeps ---------------------------------------------------------------------
@dataclass
class SweepResult:
    parameter: str
    columns: list[str]
    rows: list[list[float]]
    slopes: dict

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join("" if v is None else f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"


def loglog_slope(x, y) -> float | None:
    x, y = np.asarray(x, dtype=float), np.abs(np.asarray(y, dtype=float))
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def _positive(values, name) -> list[float]:
    vals = [float(v) for v in values]
    if not vals or any(not np.isfinite(v) or v <= 0 for v in vals):
        raise BadSweepValue(f"{name} values must be positive and finite, got {values}")
    return vals


def sweep(config: ScenarioConfig, parameter: str, values, seed: int | None = None,
          grid_steps: int | None = None, mc_paths: int | None = None) -> SweepResult:
    base = config.scenario(seed=seed, grid_steps=grid_steps)
    mc = config.run.get("mc_paths", 1) if mc_paths is None else mc_paths
    if parameter == "LambdaScale":
        eps = _positive(values, parameter)
        rows = []
        for e in eps:
            scn = base.replace(market=base.market.scaled_cost(e))
            fp = friction_premium(scn)
            if fp is None:
                raise BadSweepValue("LambdaScale needs equal tolerances or two investors")
            res = solve_regime(Regime.FRICTIONAL_NASH if scn.investors.equal_tolerances
                               else Regime.FRICTIONAL_NASH_TWO_INVESTOR, scn)
            clearing = oracle.verify_clearing(res, scn.noise)
            rows.append([e, sup(fp.values), sup(fl.liquidity_premium(scn).direct.values),
                         clearing.demand_violation, clearing.rate_violation])
        cols = ["lambda_scale", "friction_premium_sup", "liquidity_premium_sup",
                "clearing_violation", "rate_clearing_violation"]
        slopes = {"friction_premium_vs_lambda_scale": loglog_slope(eps, [r[1] for r in rows])}
        return SweepResult(parameter, cols, rows, slopes)

    if parameter == "NInvestors":
        if not base.investors.equal_tolerances:
            raise BadSweepValue("NInvestors needs an equal-tolerance template")
        counts = []
        for v in values:
            if float(v) != int(v) or int(v) < 2:
                raise BadSweepValue(f"investor counts must be integers >= 2, got {v}")
            counts.append(int(v))
        competitive = config.run.get("competitive_friction_coefficient")
        template = base.investors
        rows = []
        for N in counts:
            inv = InvestorSet(np.full(N, template.tolerances[0]), [template.exposures[0]] * N)
            scn = base.replace(investors=inv)
            fp = friction_premium(scn)
            coef = fr.friction_premium_coefficient(N)
            ratio = None if competitive is None else coef / competitive
            premium = sup(fp.values)
            rows.append([N, coef, premium, premium / coef, ratio])
        cols = ["num_investors", "friction_coefficient", "friction_premium_sup",
                "premium_per_coefficient", "nash_to_competitive_ratio"]
        slopes = {"friction_premium_vs_num_investors": loglog_slope(counts, [r[2] for r in rows]),
                  "friction_coefficient_vs_num_investors": loglog_slope(counts, [r[1] for r in rows])}
        return SweepResult(parameter, cols, rows, slopes)

    if parameter == "Delta1":
        deltas = _positive(values, parameter)
        rows = []
        for d1 in deltas:
            scn = base.replace(investors=base.investors.with_tolerance(0, d1))
            comp = fl.surplus_report(scn, Regime.FRICTIONLESS_COMPETITIVE, mc).surplus[0]
            nash = fl.surplus_report(scn, Regime.FRICTIONLESS_NASH, mc).surplus[0]
            limit = fl.nash_surplus_limit(scn, 0)
            gap = oracle_deltas(scn)["nash_fixed_point_gap"]
            rows.append([d1, comp, nash, limit, abs(nash - limit) / abs(limit) if limit else None, gap])
        cols = ["delta_1", "competitive_surplus", "nash_surplus", "nash_surplus_limit",
                "nash_relative_gap_to_limit", "nash_fixed_point_gap"]
        slopes = {"competitive_surplus_vs_delta_1": loglog_slope(deltas, [r[1] for r in rows])}
        return SweepResult(parameter, cols, rows, slopes)

    raise BadSweepValue(f"unknown sweep parameter {parameter!r}")


def write_sweep(result: SweepResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"sweep_{result.parameter}.csv"
    csv_path.write_text(result.to_csv())
    json_path = out / f"sweep_{result.parameter}.json"
    json_path.write_text(format_json({"parameter": result.parameter, "slopes": result.slopes}))
    return [csv_path, json_path]


def oracle_battery(count: int = 50, seed: int = 20240601, num_steps: int = 100) -> dict:
    """Clearing and Nash-oracle deltas over the randomized battery."""
    worst = {"clearing": 0.0, "rate_clearing": 0.0, "nash_fixed_point_gap": 0.0,
             "nash_linear_solve_gap": 0.0, "pointwise_best_response_gap": 0.0,
             "nash_contraction_ratio": 0.0}
    for scn in oracle.scenario_battery(count, seed, num_steps):
        for regime in Regime:
            try:
                check_applicable(regime, scn)
            except ValidationError:
                continue
            rep = oracle.verify_clearing(solve_regime(regime, scn), scn.noise)
            worst["clearing"] = max(worst["clearing"], rep.demand_violation)
            if rep.rate_violation is not None:
                worst["rate_clearing"] = max(worst["rate_clearing"], rep.rate_violation)
        deltas = oracle_deltas(scn)
        for key in ("nash_fixed_point_gap", "nash_linear_solve_gap",
                    "pointwise_best_response_gap", "nash_contraction_ratio"):
            worst[key] = max(worst[key], deltas[key])
    return {"scenarios": count, "seed": seed, "grid_steps": num_steps, "worst": worst}
