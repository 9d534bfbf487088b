"""Equilibria under quadratic trading costs: the strategic investor's best
response, the frictional Nash equilibrium for equal tolerances and the
two-investor equilibrium with arbitrary tolerances.

Targets are assembled as :class:`~impacteq.paths.AffineProcess` objects from
the same closed forms the frictionless module uses, and handed to the
explicit solver in :mod:`impacteq.kernel` together with their exact
conditional means.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnequalToleranceUnsupported, WrongN
from .frictionless import (
    _best_response_demand,
    _competitive_returns,
    _nash_returns,
    best_response_returns,
    nash_returns,
)
from .kernel import (
    FBSDESolution,
    FrictionKernel,
    build_kernel,
    fbsde_residual,
    kronecker_kernel,
    solve_linear_fbsde,
    unit_kernel,
)
from .model import EquilibriumResult, MarketParams, Regime
from .paths import AffineProcess, PathGrid, check_same_grid
from .scenario import Scenario


def friction_premium_coefficient(N: int) -> float:
    """Coefficient of ``Lambda (a - r psi_dot)`` in the frictional Nash returns."""
    return 2.0 / (N * (N - 1))


def best_response_friction_coefficient(N: int) -> float:
    """Coefficient of ``Lambda (a - r psi_dot)`` when one investor is strategic."""
    return 2.0 * N / (N * N - 1)


def _require_equal(scn: Scenario) -> float:
    if not scn.investors.equal_tolerances:
        raise UnequalToleranceUnsupported(
            "this construction needs equal risk tolerances (or use the two-investor route)"
        )
    return float(scn.investors.tolerances[0])


@dataclass(frozen=True, eq=False)
class TrackingTarget:
    """The target ``TP`` and its filtered transform, plus the kernel used."""

    tp: PathGrid
    tp_tilde: PathGrid
    kernel: FrictionKernel


def _best_response_problem(scn: Scenario, n: int) -> tuple[FrictionKernel, AffineProcess]:
    inv = scn.investors
    inv.check_index(n)
    market = scn.market
    lam_n = inv.relative[n]
    zo, psi, zn = scn.zeta_others_process(n), scn.psi_process(), scn.zeta_process(n)
    frictionless = _best_response_demand(lam_n, inv.others_relative(n), zo, psi, zn)
    cost_adj = market.cost @ market.covariance_inv  # row form of Sigma^{-1} Lambda
    drift = scn.noise_drift_process()
    if inv.equal_tolerances:
        delta_bar = float(inv.tolerances[0])
        kernel = build_kernel(market, delta_bar)
        target = frictionless + drift @ cost_adj * (2.0 * delta_bar / (scn.N + 1))
    elif scn.N == 2:
        d_n, d_o, delta = inv.tolerances[n], inv.others_total(n), inv.total
        kernel = unit_kernel(market, (delta + d_n) / (6.0 * d_n * d_o))
        target = frictionless + drift @ cost_adj * (2.0 * d_n * d_o / (delta + d_n))
    else:
        raise UnequalToleranceUnsupported(
            "heterogeneous tolerances are supported only for two investors"
        )
    return kernel, target


def _solve(scn: Scenario, kernel: FrictionKernel, target: AffineProcess) -> FBSDESolution:
    return solve_linear_fbsde(kernel, scn.cm_terms(target), scn.grid)


def tracking_target(scn: Scenario, n: int) -> TrackingTarget:
    kernel, target = _best_response_problem(scn, n)
    sol = _solve(scn, kernel, target)
    return TrackingTarget(scn.path(scn.evaluate(target)), scn.path(sol.filtered_target), kernel)


def frictional_best_response(scn: Scenario, n: int) -> tuple[PathGrid, PathGrid]:
    """Demand and trading rate of the strategic investor ``n``."""
    kernel, target = _best_response_problem(scn, n)
    sol = _solve(scn, kernel, target)
    return scn.path(sol.state), scn.path(sol.rate)


def frictional_best_response_returns(scn: Scenario, n: int) -> PathGrid:
    _require_equal(scn)
    coef = best_response_friction_coefficient(scn.N)
    friction = coef * scn.noise_drift @ scn.market.cost
    return scn.path(best_response_returns(scn, n).values + friction)


def _best_response_returns_process(scn: Scenario, n: int) -> AffineProcess:
    inv = scn.investors
    sigma = scn.market.covariance
    lam = inv.relative[n]
    psi = scn.psi_process()
    mu_others = _competitive_returns(sigma, inv.others_total(n), scn.zeta_others_process(n), psi)
    mu_hat = _competitive_returns(sigma, inv.total, scn.zeta_total_process(), psi)
    coef = best_response_friction_coefficient(scn.N)
    return (mu_others * (lam / (lam + 1.0)) + mu_hat * (1.0 / (lam + 1.0))
            + scn.noise_drift_process() @ scn.market.cost * coef)


def frictional_best_response_equilibrium(scn: Scenario, n: int = 0) -> EquilibriumResult:
    """Investor ``n`` strategic, the others frictional price takers; all share
    the tolerance ``delta_bar`` and hence the kernel."""
    delta_bar = _require_equal(scn)
    kernel, target = _best_response_problem(scn, n)
    nu = _best_response_returns_process(scn, n)
    sigma_inv = scn.market.covariance_inv
    demands, rates = [], []
    for m in range(scn.N):
        if m == n:
            tgt = target
        else:
            tgt = nu @ sigma_inv * delta_bar - scn.zeta_process(m)
        sol = _solve(scn, kernel, tgt)
        demands.append(scn.path(sol.state))
        rates.append(scn.path(sol.rate))
    return EquilibriumResult(Regime.FRICTIONAL_BEST_RESPONSE, scn.path(scn.evaluate(nu)),
                             tuple(demands), tuple(rates))


def _nash_returns_process(scn: Scenario, coefficient: float) -> AffineProcess:
    zetas = [scn.zeta_process(m) for m in range(scn.N)]
    base = _nash_returns(scn.market.covariance, scn.investors, zetas, scn.psi_process())
    return base + scn.noise_drift_process() @ scn.market.cost * coefficient


def frictional_nash_returns(scn: Scenario) -> PathGrid:
    _require_equal(scn)
    coef = friction_premium_coefficient(scn.N)
    return scn.path(nash_returns(scn).values + coef * scn.noise_drift @ scn.market.cost)


def _split(scn: Scenario, values: np.ndarray) -> tuple[PathGrid, ...]:
    d = scn.d
    return tuple(scn.path(values[:, m * d:(m + 1) * d]) for m in range(scn.N))


def nash_coupling(N: int) -> np.ndarray:
    """Equal-tolerance coupling: ones on the diagonal, ``1/(N+1)`` elsewhere."""
    return np.full((N, N), 1.0 / (N + 1)) + (1.0 - 1.0 / (N + 1)) * np.eye(N)


def frictional_nash(scn: Scenario) -> EquilibriumResult:
    """Frictional Nash equilibrium for ``N`` investors with equal tolerances."""
    delta_bar = _require_equal(scn)
    N, d = scn.N, scn.d
    market = scn.market
    nu = _nash_returns_process(scn, friction_premium_coefficient(N))
    cost_adj = market.cost @ market.covariance_inv
    drift_term = scn.noise_drift_process() @ cost_adj * (2.0 * delta_bar)
    common = nu @ market.covariance_inv * ((N - 1) * delta_bar) - scn.psi_process() + drift_term
    # Z = (I (x) B) Y, so the stacked target B^{-1} Z is (C^{-1} (x) I) Y
    Y = AffineProcess.stack([(common - scn.zeta_process(m) * (N - 1)) / (N + 1) for m in range(N)])
    C = nash_coupling(N)
    target = Y @ np.kron(np.linalg.inv(C), np.eye(d)).T
    kernel = kronecker_kernel(C, build_kernel(market, delta_bar))
    sol = _solve(scn, kernel, target)
    return EquilibriumResult(Regime.FRICTIONAL_NASH, scn.path(scn.evaluate(nu)),
                             _split(scn, sol.state), _split(scn, sol.rate))


def two_investor_coupling(tolerances) -> np.ndarray:
    d1, d2 = tolerances
    delta = d1 + d2
    return np.array([[delta + d1, d1], [d2, delta + d2]])


def frictional_nash_two_investors(scn: Scenario) -> EquilibriumResult:
    """Frictional Nash equilibrium of two investors with arbitrary tolerances."""
    if scn.N != 2:
        raise WrongN(f"two investors required, got {scn.N}")
    market, d = scn.market, scn.d
    d1, d2 = scn.investors.tolerances
    delta = d1 + d2
    nu = _nash_returns_process(scn, 1.0)
    sigma_inv = market.covariance_inv
    cost_adj = market.cost @ sigma_inv
    drift = scn.noise_drift_process() @ cost_adj * (2.0 * d1 * d2)
    psi = scn.psi_process()
    blocks = []
    for m, (dm, do) in enumerate([(d1, d2), (d2, d1)]):
        y = ((nu @ sigma_inv * do - psi) * dm - scn.zeta_process(m) * do + drift) / (delta + dm)
        blocks.append(y)
    Y = AffineProcess.stack(blocks)
    C = two_investor_coupling((d1, d2))
    # Z = (diag(C) (x) U) Y with U the unit matrix, so B^{-1} Z = (C^{-1} diag(C) (x) I) Y
    target = Y @ np.kron(np.linalg.inv(C) @ np.diag(np.diag(C)), np.eye(d)).T
    eigvals = np.array([2.0 * delta, delta])
    eigvecs = np.array([[d1, 1.0], [d2, -1.0]])
    kernel = kronecker_kernel(C, unit_kernel(market, 1.0 / (6.0 * d1 * d2)), eigen=(eigvals, eigvecs))
    sol = _solve(scn, kernel, target)
    return EquilibriumResult(Regime.FRICTIONAL_NASH_TWO_INVESTOR, scn.path(scn.evaluate(nu)),
                             _split(scn, sol.state), _split(scn, sol.rate))


def frictional_competitive_residual(market: MarketParams, tolerance: float, nu: PathGrid,
                                    phi: PathGrid, phi_dot: PathGrid,
                                    zeta_m: PathGrid) -> np.ndarray:
    """Central-difference residual of the price-taking frictional FBSDE on a
    deterministic path, at the interior nodes ``t_1 .. t_{K-1}``."""
    grid = check_same_grid(nu, phi, phi_dot, zeta_m)
    B = np.linalg.solve(market.cost, market.covariance) / (2.0 * tolerance)
    target = tolerance * nu.values @ market.covariance_inv - zeta_m.values
    return fbsde_residual(B, target, phi.values, phi_dot.values, market.discount_rate, grid)
