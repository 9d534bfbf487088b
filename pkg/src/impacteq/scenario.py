"""A scenario bundles market, investors, noise, grid and seed, and caches the
realized exposure paths so every regime sees the same sample."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .model import InvestorSet, MarketParams, validate_market
from .paths import AffineProcess, NoiseSpec, PathGrid, TimeGrid, brownian_increments


@dataclass(frozen=True, eq=False)
class Scenario:
    market: MarketParams
    investors: InvestorSet
    noise: NoiseSpec
    grid: TimeGrid
    seed: int | None = None

    def __post_init__(self):
        if self.noise is None:
            object.__setattr__(self, "noise", NoiseSpec.none(self.market.num_assets))
        if self.grid.horizon != self.market.horizon:
            raise ValueError(
                f"grid horizon {self.grid.horizon} differs from market horizon {self.market.horizon}"
            )
        validate_market(self.market, self.investors, self.noise)

    # bookkeeping ----------------------------------------------------------
    @property
    def d(self) -> int:
        return self.market.num_assets

    @property
    def N(self) -> int:
        return self.investors.size

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def stochastic(self) -> bool:
        return any(spec.stochastic for spec in self.investors.exposures)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def with_grid(self, num_steps: int) -> "Scenario":
        return self.replace(grid=TimeGrid(self.market.horizon, num_steps))

    # realized paths -------------------------------------------------------
    @cached_property
    def exposure_paths(self) -> tuple[PathGrid, ...]:
        increments = None
        if self.stochastic:
            increments = brownian_increments(self.grid, self.d, self.seed)
        return tuple(spec.realize_with(self.grid, increments) for spec in self.investors.exposures)

    def zeta(self, m: int) -> np.ndarray:
        return self.exposure_paths[m].values

    @cached_property
    def zeta_stack(self) -> np.ndarray:
        """Exposures as an ``(N, K+1, d)`` array."""
        return np.stack([p.values for p in self.exposure_paths])

    def zeta_total(self) -> np.ndarray:
        return self.zeta_stack.sum(axis=0)

    def zeta_others(self, n: int) -> np.ndarray:
        return np.delete(self.zeta_stack, n, axis=0).sum(axis=0)

    @cached_property
    def psi(self) -> np.ndarray:
        return self.noise.level_at(self.t)

    @cached_property
    def psi_dot(self) -> np.ndarray:
        return self.noise.rate_at(self.t)

    @cached_property
    def noise_drift(self) -> np.ndarray:
        """``a - r psi_dot`` where ``a`` is the drift of the noise rate."""
        return self.noise.drift_at(self.t) - self.market.discount_rate * self.psi_dot

    # symbolic (affine) counterparts, used where conditional means are needed
    def zeta_process(self, m: int) -> AffineProcess:
        return AffineProcess.exposure(m, self.N, self.d)

    def zeta_others_process(self, n: int) -> AffineProcess:
        return sum((self.zeta_process(m) for m in range(self.N) if m != n),
                   AffineProcess.zero(self.d, self.N))

    def zeta_total_process(self) -> AffineProcess:
        return sum((self.zeta_process(m) for m in range(self.N)), AffineProcess.zero(self.d, self.N))

    def psi_process(self) -> AffineProcess:
        return AffineProcess.deterministic(self.noise.level_at, self.d, self.N)

    def noise_drift_process(self) -> AffineProcess:
        r = self.market.discount_rate
        fn = lambda u: self.noise.drift_at(u) - r * self.noise.rate_at(u)
        return AffineProcess.deterministic(fn, self.d, self.N)

    def path(self, values) -> PathGrid:
        return PathGrid(self.grid, values)

    def evaluate(self, process: AffineProcess) -> np.ndarray:
        return process.on_grid(self.grid, self.exposure_paths)

    def cm_terms(self, process: AffineProcess):
        return process.cm_terms(self.investors.exposures, self.exposure_paths)

    def sample_seeds(self, count: int) -> list[int]:
        """Independent child seeds for Monte Carlo replications."""
        base = 0 if self.seed is None else self.seed
        state = np.random.SeedSequence(base).generate_state(count, dtype=np.uint32)
        return [int(s) for s in state]
