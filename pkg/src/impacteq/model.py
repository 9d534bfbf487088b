"""Market primitives, investor data and the aggregation identities."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadDimension,
    BadIndex,
    InadmissibleNoise,
    NonDiagonalCost,
    NonSPDCovariance,
    ValidationError,
)
from .paths import NoiseSpec, PathGrid, ProcessSpec, Sum, TimeGrid

SYMMETRY_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class MarketParams:
    """Covariance ``Sigma``, diagonal trading cost ``Lambda``, discount rate
    ``r`` and horizon ``T``. Shapes are normalised here; the economic
    invariants are checked by :func:`validate_market`."""

    covariance: np.ndarray
    cost: np.ndarray
    discount_rate: float = 0.0
    horizon: float = 1.0

    def __post_init__(self):
        sigma = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        cost = np.asarray(self.cost, dtype=float)
        if cost.ndim < 2:
            cost = np.diag(np.atleast_1d(cost)) if cost.ndim == 1 else cost * np.eye(sigma.shape[0])
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] < 1:
            raise BadDimension(f"covariance must be square, got shape {sigma.shape}")
        if cost.shape != sigma.shape:
            raise BadDimension(f"cost shape {cost.shape} does not match covariance {sigma.shape}")
        object.__setattr__(self, "covariance", _frozen(sigma))
        object.__setattr__(self, "cost", _frozen(cost))
        object.__setattr__(self, "discount_rate", float(self.discount_rate))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def num_assets(self) -> int:
        return self.covariance.shape[0]

    @property
    def covariance_inv(self) -> np.ndarray:
        return np.linalg.inv(self.covariance)

    def scaled_cost(self, eps: float) -> "MarketParams":
        return MarketParams(self.covariance, eps * self.cost, self.discount_rate, self.horizon)

    def scaled_covariance(self, c: float) -> "MarketParams":
        return MarketParams(c * self.covariance, self.cost, self.discount_rate, self.horizon)


@dataclass(frozen=True, eq=False)
class InvestorSet:
    tolerances: np.ndarray
    exposures: tuple[ProcessSpec, ...]

    def __post_init__(self):
        tol = np.atleast_1d(np.asarray(self.tolerances, dtype=float))
        exposures = tuple(self.exposures)
        if tol.ndim != 1 or tol.size != len(exposures):
            raise BadDimension(f"{tol.size} tolerances for {len(exposures)} exposures")
        object.__setattr__(self, "tolerances", _frozen(tol))
        object.__setattr__(self, "exposures", exposures)

    @property
    def size(self) -> int:
        return self.tolerances.size

    @property
    def total(self) -> float:
        return float(self.tolerances.sum())

    @property
    def relative(self) -> np.ndarray:
        return self.tolerances / self.total

    def others_total(self, n: int) -> float:
        """``delta_{-n}``, computed as a sum so that no cancellation occurs."""
        self.check_index(n)
        return float(np.delete(self.tolerances, n).sum())

    def others_relative(self, n: int) -> float:
        return self.others_total(n) / self.total

    def curvature(self, n: int) -> float:
        """``k_n = 2/delta_{-n} + 1/delta_n``, the curvature of the price-impact
        objective written as ``-(k_n / 2) phi' Sigma phi``."""
        return 2.0 / self.others_total(n) + 1.0 / self.tolerances[n]

    def check_index(self, n: int) -> None:
        if not (isinstance(n, (int, np.integer)) and 0 <= n < self.size):
            raise BadIndex(f"investor index {n!r} outside 0..{self.size - 1}")

    @property
    def equal_tolerances(self) -> bool:
        return bool(np.all(self.tolerances == self.tolerances[0]))

    def with_tolerance(self, n: int, value: float) -> "InvestorSet":
        tol = self.tolerances.copy()
        tol[n] = value
        return InvestorSet(tol, self.exposures)


class Regime(str, enum.Enum):
    FRICTIONLESS_COMPETITIVE = "FrictionlessCompetitive"
    FRICTIONLESS_NASH = "FrictionlessNash"
    FRICTIONAL_BEST_RESPONSE = "FrictionalBestResponse"
    FRICTIONAL_NASH = "FrictionalNash"
    FRICTIONAL_NASH_TWO_INVESTOR = "FrictionalNashTwoInvestor"

    @property
    def frictional(self) -> bool:
        return self.value.startswith("Frictional") and not self.value.startswith("Frictionless")


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    regime: Regime
    returns: PathGrid
    demands: tuple[PathGrid, ...]
    rates: tuple[PathGrid, ...] | None = None

    @property
    def grid(self) -> TimeGrid:
        return self.returns.grid


@dataclass(frozen=True)
class ValidationReport:
    num_assets: int
    num_investors: int
    min_covariance_eigenvalue: float
    frictional_checked: bool
    terminal_noise_rate: float
    checks: tuple[str, ...] = field(default_factory=tuple)


def validate_market(market: MarketParams, investors: InvestorSet,
                    noise: NoiseSpec | None = None, frictional: bool = False,
                    rate_tol: float = 1e-12) -> ValidationReport:
    """Check the standing assumptions; raise a :class:`ValidationError`
    subclass on the first violation, return a report otherwise."""
    d = market.num_assets
    sigma, cost = market.covariance, market.cost
    if not np.all(np.isfinite(sigma)) or not np.all(np.isfinite(cost)):
        raise ValidationError("market matrices must be finite")
    if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(sigma))):
        raise NonSPDCovariance("covariance is not symmetric")
    min_eig = float(np.linalg.eigvalsh(sigma).min())
    if not min_eig > 0:
        raise NonSPDCovariance(f"covariance has eigenvalue {min_eig:.3g} <= 0")
    if np.any(cost - np.diag(np.diag(cost))):
        raise NonDiagonalCost("trading cost matrix must be diagonal")
    if not np.all(np.diag(cost) > 0):
        raise NonDiagonalCost("trading cost diagonal must be strictly positive")
    if market.discount_rate < 0 or not np.isfinite(market.discount_rate):
        raise ValidationError(f"discount rate must be >= 0, got {market.discount_rate}")
    if not market.horizon > 0 or not np.isfinite(market.horizon):
        raise ValidationError(f"horizon must be > 0, got {market.horizon}")

    if investors.size < 2:
        raise BadDimension(f"at least two investors required, got {investors.size}")
    if not np.all(investors.tolerances > 0) or not np.all(np.isfinite(investors.tolerances)):
        raise ValidationError("risk tolerances must be positive and finite")
    for m, spec in enumerate(investors.exposures):
        if spec.dim != d:
            raise BadDimension(f"exposure {m} has dimension {spec.dim}, market has {d}")
        if not spec.parameters_finite():
            raise ValidationError(f"exposure {m} has non-finite parameters")

    terminal = 0.0
    if noise is not None:
        if noise.dim != d:
            raise BadDimension(f"noise has dimension {noise.dim}, market has {d}")
        T = market.horizon
        probe = np.array([0.0, T])
        level, rate = noise.level_at(probe), noise.rate_at(probe)
        if not (np.all(np.isfinite(level)) and np.all(np.isfinite(rate))):
            raise ValidationError("noise is not finite at the endpoints")
        if np.any(level[0] != 0):
            raise InadmissibleNoise("noise demand must start at zero")
        terminal = float(np.max(np.abs(rate[1])))
        if frictional and terminal > rate_tol:
            raise InadmissibleNoise(
                f"frictional regimes need a vanishing terminal noise rate, got {terminal:.3g}"
            )
    checks = ("covariance SPD", "cost diagonal positive", "investors", "noise")
    return ValidationReport(d, investors.size, min_eig, frictional, terminal, checks)


def aggregate(investors: InvestorSet) -> tuple[float, np.ndarray, Sum]:
    """Aggregate tolerance, relative tolerances and total exposure."""
    return investors.total, investors.relative, Sum(investors.exposures)


__all__ = [
    "MarketParams", "InvestorSet", "TimeGrid", "PathGrid", "Regime", "EquilibriumResult",
    "ValidationReport", "validate_market", "aggregate",
]
