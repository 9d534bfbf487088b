"""Equilibrium returns and demands under price impact and quadratic trading
costs: frictionless and frictional, competitive and Nash, with brute-force
oracles for every closed form."""
from __future__ import annotations

from .config import ScenarioConfig
from .errors import (
    BadDimension,
    BadIndex,
    BadSeed,
    BadSweepValue,
    ConfigParse,
    DimensionMismatch,
    GridMismatch,
    ImpactEqError,
    InadmissibleNoise,
    NoConvergence,
    NonDiagonalCost,
    NonSPDCovariance,
    SingularKKT,
    SingularSystem,
    SpectralFailure,
    TimeOrder,
    UnequalToleranceUnsupported,
    UnsupportedKind,
    ValidationError,
    WrongN,
)
from .frictional import (
    frictional_best_response,
    frictional_best_response_equilibrium,
    frictional_best_response_returns,
    frictional_competitive_residual,
    frictional_nash,
    frictional_nash_returns,
    frictional_nash_two_investors,
    tracking_target,
)
from .frictionless import (
    best_response_demand,
    best_response_returns,
    best_response_revealed_exposure,
    competitive_demands,
    competitive_returns,
    frictionless_competitive,
    frictionless_nash,
    liquidity_premium,
    nash_demands,
    nash_returns,
    nash_surplus_limit,
    price_impact_returns,
    revealed_exposure,
    surplus_report,
    utility_surplus,
)
from .kernel import FrictionKernel, build_kernel, solve_linear_fbsde
from .model import (
    EquilibriumResult,
    InvestorSet,
    MarketParams,
    Regime,
    aggregate,
    validate_market,
)
from .paths import (
    OU,
    AffineProcess,
    Constant,
    Deterministic,
    Martingale,
    NoiseSpec,
    PathGrid,
    Sum,
    TimeGrid,
    conditional_mean,
    realize,
)
from .scenario import Scenario

__all__ = [
    "AffineProcess",
    "Constant",
    "Deterministic",
    "EquilibriumResult",
    "FrictionKernel",
    "InvestorSet",
    "MarketParams",
    "Martingale",
    "NoiseSpec",
    "OU",
    "PathGrid",
    "Regime",
    "Scenario",
    "ScenarioConfig",
    "Sum",
    "TimeGrid",
    "aggregate",
    "annotations",
    "best_response_demand",
    "best_response_returns",
    "best_response_revealed_exposure",
    "build_kernel",
    "competitive_demands",
    "competitive_returns",
    "conditional_mean",
    "frictional_best_response",
    "frictional_best_response_equilibrium",
    "frictional_best_response_returns",
    "frictional_competitive_residual",
    "frictional_nash",
    "frictional_nash_returns",
    "frictional_nash_two_investors",
    "frictionless_competitive",
    "frictionless_nash",
    "liquidity_premium",
    "nash_demands",
    "nash_returns",
    "nash_surplus_limit",
    "price_impact_returns",
    "realize",
    "revealed_exposure",
    "solve_linear_fbsde",
    "surplus_report",
    "tracking_target",
    "utility_surplus",
    "validate_market",
    "BadDimension",
    "BadIndex",
    "BadSeed",
    "BadSweepValue",
    "ConfigParse",
    "DimensionMismatch",
    "GridMismatch",
    "ImpactEqError",
    "InadmissibleNoise",
    "NoConvergence",
    "NonDiagonalCost",
    "NonSPDCovariance",
    "SingularKKT",
    "SingularSystem",
    "SpectralFailure",
    "TimeOrder",
    "UnequalToleranceUnsupported",
    "UnsupportedKind",
    "ValidationError",
    "WrongN",
]

__version__ = "0.1.0"
