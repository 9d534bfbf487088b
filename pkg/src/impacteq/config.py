"""YAML scenario configuration.

A config has four blocks: ``market``, ``investors``, ``noise`` and ``run``.
Parsing normalises every number to ``float`` (or ``int`` where a count is
meant), so ``dump(load(text))`` is a fixed point: re-serialising a loaded
config reproduces the same text byte for byte.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ConfigParse, DimensionMismatch, ValidationError
from .model import InvestorSet, MarketParams, Regime, validate_market
from .paths import OU, Constant, Deterministic, Martingale, NoiseSpec, ProcessSpec, Sum, TimeGrid
from .scenario import Scenario

SWEEP_PARAMETERS = ("LambdaScale", "NInvestors", "Delta1")

TEMPLATE = """\
market:
  covariance: [[0.04, 0.01], [0.01, 0.09]]
  cost_diagonal: [0.1, 0.2]
  discount_rate: 0.0
  horizon: 1.0
  grid_steps: 400
investors:
  - tolerance: 1.0
    exposure: {kind: constant, value: [1.0, 0.5]}
  - tolerance: 1.0
    exposure: {kind: ou, initial: [0.2, -0.1], mean: [0.0, 0.0], reversion: 2.0, scale: [[0.2, 0.0], [0.0, 0.2]]}
  - tolerance: 1.0
    exposure: {kind: polynomial, coefficients: [[0.5, 0.0], [0.0, 1.0]]}
noise:
  kind: polynomial
  coefficients: [[1.0, 0.5]]
run:
  regimes: [FrictionlessCompetitive, FrictionlessNash, FrictionalNash]
  seed: 12345
  mc_paths: 1
  strategic_investor: 0
  competitive_friction_coefficient: null
  sweep:
    parameter: LambdaScale
    values: [1.0, 0.1, 0.01]
"""


def _floats(x, name: str, ndim: int) -> list:
    try:
        arr = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"{name}: expected numbers, got {x!r}") from exc
    if arr.ndim != ndim:
        raise ConfigParse(f"{name}: expected a {ndim}-d list, got shape {arr.shape}")
    return arr.tolist()


def _float(x, name: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigParse(f"{name}: expected a number, got {x!r}")
    return float(x)


def _int(x, name: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigParse(f"{name}: expected an integer, got {x!r}")
    return x


def _get(block: dict, key: str, where: str):
    if not isinstance(block, dict):
        raise ConfigParse(f"{where}: expected a mapping")
    if key not in block:
        raise ConfigParse(f"{where}: missing key '{key}'")
    return block[key]


def _exposure(raw: dict, where: str) -> dict:
    kind = _get(raw, "kind", where)
    if kind == "constant":
        return {"kind": kind, "value": _floats(_get(raw, "value", where), f"{where}.value", 1)}
    if kind == "polynomial":
        return {"kind": kind,
                "coefficients": _floats(_get(raw, "coefficients", where), f"{where}.coefficients", 2)}
    if kind == "martingale":
        return {"kind": kind,
                "initial": _floats(_get(raw, "initial", where), f"{where}.initial", 1),
                "scale": _floats(_get(raw, "scale", where), f"{where}.scale", 2)}
    if kind == "ou":
        return {"kind": kind,
                "initial": _floats(_get(raw, "initial", where), f"{where}.initial", 1),
                "mean": _floats(_get(raw, "mean", where), f"{where}.mean", 1),
                "reversion": _float(_get(raw, "reversion", where), f"{where}.reversion"),
                "scale": _floats(_get(raw, "scale", where), f"{where}.scale", 2)}
    if kind == "sum":
        parts = _get(raw, "parts", where)
        if not isinstance(parts, list) or not parts:
            raise ConfigParse(f"{where}.parts: expected a non-empty list")
        return {"kind": kind, "parts": [_exposure(p, f"{where}.parts[{i}]") for i, p in enumerate(parts)]}
    raise ConfigParse(f"{where}: unknown exposure kind {kind!r}")


def exposure_spec(raw: dict) -> ProcessSpec:
    kind = raw["kind"]
    if kind == "constant":
        return Constant(raw["value"])
    if kind == "polynomial":
        return Deterministic.polynomial(raw["coefficients"])
    if kind == "martingale":
        return Martingale(raw["initial"], raw["scale"])
    if kind == "ou":
        return OU(raw["initial"], raw["mean"], raw["reversion"], raw["scale"])
    return Sum(tuple(exposure_spec(p) for p in raw["parts"]))


@dataclass
class ScenarioConfig:
    market: dict
    investors: list
    noise: dict
    run: dict = field(default_factory=dict)

    # parsing --------------------------------------------------------------
    @classmethod
    def from_dict(cls, raw: Any) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigParse("config must be a mapping with market/investors/noise/run blocks")
        unknown = set(raw) - {"market", "investors", "noise", "run"}
        if unknown:
            raise ConfigParse(f"unknown top-level keys: {sorted(unknown)}")
        m = _get(raw, "market", "config")
        market = {
            "covariance": _floats(_get(m, "covariance", "market"), "market.covariance", 2),
            "cost_diagonal": _floats(_get(m, "cost_diagonal", "market"), "market.cost_diagonal", 1),
            "discount_rate": _float(m.get("discount_rate", 0.0), "market.discount_rate"),
            "horizon": _float(m.get("horizon", 1.0), "market.horizon"),
            "grid_steps": _int(m.get("grid_steps", 400), "market.grid_steps"),
        }
        inv = _get(raw, "investors", "config")
        if not isinstance(inv, list) or not inv:
            raise ConfigParse("investors: expected a non-empty list")
        investors = [
            {"tolerance": _float(_get(item, "tolerance", f"investors[{i}]"), f"investors[{i}].tolerance"),
             "exposure": _exposure(_get(item, "exposure", f"investors[{i}]"), f"investors[{i}].exposure")}
            for i, item in enumerate(inv)
        ]
        n = raw.get("noise") or {"kind": "none"}
        kind = _get(n, "kind", "noise")
        if kind == "none":
            noise = {"kind": "none"}
        elif kind in ("polynomial", "trig"):
            noise = {"kind": kind,
                     "coefficients": _floats(_get(n, "coefficients", "noise"), "noise.coefficients", 2)}
        else:
            raise ConfigParse(f"noise: unknown kind {kind!r}")
        r = raw.get("run") or {}
        if not isinstance(r, dict):
            raise ConfigParse("run: expected a mapping")
        regimes = r.get("regimes", [Regime.FRICTIONLESS_COMPETITIVE.value, Regime.FRICTIONLESS_NASH.value])
        try:
            regimes = [Regime(x).value for x in regimes]
        except (ValueError, TypeError) as exc:
            raise ConfigParse(f"run.regimes: {exc}") from exc
        coef = r.get("competitive_friction_coefficient")
        run = {
            "regimes": regimes,
            "seed": _int(r.get("seed", 0), "run.seed"),
            "mc_paths": _int(r.get("mc_paths", 1), "run.mc_paths"),
            "strategic_investor": _int(r.get("strategic_investor", 0), "run.strategic_investor"),
            "competitive_friction_coefficient":
                None if coef is None else _float(coef, "run.competitive_friction_coefficient"),
        }
        if "sweep" in r and r["sweep"] is not None:
            sw = r["sweep"]
            param = _get(sw, "parameter", "run.sweep")
            if param not in SWEEP_PARAMETERS:
                raise ConfigParse(f"run.sweep.parameter must be one of {SWEEP_PARAMETERS}")
            values = _get(sw, "values", "run.sweep")
            run["sweep"] = {"parameter": param, "values": _floats(values, "run.sweep.values", 1)}
        return cls(market, investors, noise, run)

    @classmethod
    def loads(cls, text: str) -> "ScenarioConfig":
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigParse(f"invalid YAML: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.loads(Path(path).read_text())

    def to_dict(self) -> dict:
        return {"market": self.market, "investors": self.investors,
                "noise": self.noise, "run": self.run}

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    # building -------------------------------------------------------------
    @property
    def regimes(self) -> list[Regime]:
        return [Regime(x) for x in self.run["regimes"]]

    def market_params(self) -> MarketParams:
        m = self.market
        return MarketParams(m["covariance"], m["cost_diagonal"], m["discount_rate"], m["horizon"])

    def noise_spec(self, dim: int) -> NoiseSpec:
        kind = self.noise["kind"]
        if kind == "none":
            return NoiseSpec.none(dim)
        if kind == "polynomial":
            return NoiseSpec.polynomial(self.noise["coefficients"], self.market["horizon"])
        return NoiseSpec.trig(self.noise["coefficients"], self.market["horizon"])

    def scenario(self, seed: int | None = None, grid_steps: int | None = None,
                 frictional: bool | None = None) -> Scenario:
        """Build and validate the scenario; every failure is a ValidationError.

        ``frictional`` defaults to whether any configured regime has trading
        costs, which switches on the terminal noise-rate check."""
        try:
            market = self.market_params()
            investors = InvestorSet([i["tolerance"] for i in self.investors],
                                    [exposure_spec(i["exposure"]) for i in self.investors])
            noise = self.noise_spec(market.num_assets)
            if frictional is None:
                frictional = any(r.frictional for r in self.regimes)
            validate_market(market, investors, noise, frictional=frictional)
            K = self.market["grid_steps"] if grid_steps is None else grid_steps
            return Scenario(market, investors, noise, TimeGrid(market.horizon, K),
                            seed=self.run.get("seed", 0) if seed is None else seed)
        except ValidationError:
            raise
        except (DimensionMismatch, ValueError, TypeError) as exc:
            raise ValidationError(str(exc)) from exc
