"""Brute-force references for the closed forms.

Each routine here reaches its answer by a route that shares no formula with
the closed forms: node-wise quadratic maximisation, best-response iteration
on revealed exposures, a bordered linear solve of the Nash system, and a
discretised quadratic program for the frictional best response.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, SingularKKT, SingularSystem, UnequalToleranceUnsupported
from .model import EquilibriumResult, InvestorSet, MarketParams
from .paths import OU, Constant, Deterministic, Martingale, NoiseSpec, PathGrid, Sum, TimeGrid
from .scenario import Scenario

COND_LIMIT = 1e12


def solve_frictionless_best_response_pointwise(scn: Scenario, n: int) -> PathGrid:
    """Maximise the node-separable price-impact objective of investor ``n``.

    The objective at each node is ``phi' nu_n(phi) - (phi + zeta_n)' Sigma
    (phi + zeta_n) / (2 delta_n)``; its stationarity condition is the linear
    system ``k_n Sigma phi = Sigma ((zeta_{-n} - psi)/delta_{-n} - zeta_n/delta_n)``.
    """
    inv = scn.investors
    inv.check_index(n)
    sigma = scn.market.covariance
    hessian = inv.curvature(n) * sigma
    if np.linalg.cond(hessian) > COND_LIMIT:
        raise SingularSystem("node-wise best-response system is singular")
    linear = ((scn.zeta_others(n) - scn.psi) / inv.others_total(n)
              - scn.zeta(n) / inv.tolerances[n]) @ sigma
    return scn.path(np.linalg.solve(hessian, linear.T).T)


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    returns: PathGrid
    demands: tuple[PathGrid, ...]
    iterations: int
    contraction_ratio: float


def nash_fixed_point(scn: Scenario, max_iters: int = 1000, tol: float = 1e-10,
                     sequential: bool = False) -> FixedPointResult:
    """Iterate simultaneous best responses on revealed exposures from zero.

    Each investor best-responds to a market of price takers whose exposures
    are the others' current revealed exposures; its own revealed exposure is
    then ``c_m (sum_{i != m} x_i - psi) + zeta_m / (1 + lambda_m)`` with
    ``c_m = lambda_m^2 / (1 - lambda_m^2)``. The fixed point is the Nash
    equilibrium; returns clear the market at the revealed exposures.
    """
    inv = scn.investors
    lam = inv.relative
    c = lam ** 2 / (1.0 - lam ** 2)
    zeta, psi = scn.zeta_stack, scn.psi
    x = np.zeros_like(zeta)
    change_prev, ratio = None, 0.0
    for it in range(1, max_iters + 1):
        new = x.copy()
        for m in range(scn.N):
            src = new if sequential else x
            others = src.sum(axis=0) - src[m]
            new[m] = c[m] * (others - psi) + zeta[m] / (1.0 + lam[m])
        change = float(np.max(np.abs(new - x)))
        x = new
        if change_prev is not None and change_prev > 0:
            ratio = change / change_prev  # asymptotic contraction estimate
        if change < tol:
            break
        change_prev = change
    else:
        raise NoConvergence(f"no convergence in {max_iters} iterations",
                            iterations=max_iters, contraction_ratio=ratio)
    sigma = scn.market.covariance
    nu = (x.sum(axis=0) - psi) @ sigma / inv.total
    demands = tuple(scn.path(inv.tolerances[m] * (nu @ scn.market.covariance_inv) - x[m])
                    for m in range(scn.N))
    return FixedPointResult(scn.path(nu), demands, it, ratio)


def nash_linear_solve(scn: Scenario) -> tuple[PathGrid, tuple[PathGrid, ...]]:
    """Solve the coupled Nash demand system and market clearing node by node.

    Unknowns are ``(phi_1, ..., phi_N, Sigma^{-1} nu)``. Row block ``m`` reads
    ``(lambda_m + 1) phi_m + lambda_m sum_{i != m} phi_i - lambda_m delta_{-m}
    Sigma^{-1} nu = -lambda_m psi - lambda_{-m} zeta_m``; the last block is
    ``sum_m phi_m = -psi``.
    """
    inv = scn.investors
    N, d = scn.N, scn.d
    lam = inv.relative
    eye = np.eye(d)
    A = np.zeros(((N + 1) * d, (N + 1) * d))
    rhs = np.zeros(((N + 1) * d, len(scn.grid)))
    for m in range(N):
        rows = slice(m * d, (m + 1) * d)
        for i in range(N):
            A[rows, i * d:(i + 1) * d] = (lam[m] + 1.0 if i == m else lam[m]) * eye
        A[rows, N * d:] = -lam[m] * inv.others_total(m) * eye
        rhs[rows] = (-lam[m] * scn.psi - inv.others_relative(m) * scn.zeta(m)).T
    for i in range(N):
        A[N * d:, i * d:(i + 1) * d] = eye
    rhs[N * d:] = -scn.psi.T
    if np.linalg.cond(A) > COND_LIMIT:
        raise SingularSystem("Nash system is singular")
    sol = np.linalg.solve(A, rhs).T
    nu = sol[:, N * d:] @ scn.market.covariance
    demands = tuple(scn.path(sol[:, m * d:(m + 1) * d]) for m in range(N))
    return scn.path(nu), demands


@dataclass(frozen=True, eq=False)
class QPSolution:
    demand: PathGrid
    rate: PathGrid
    terminal_rate: float


def _block_tridiagonal_solve(diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive definite block-tridiagonal system by block
    Cholesky elimination. ``diag`` is ``(K, d, d)``, ``upper`` ``(K-1, d, d)``
    holds the ``(k, k+1)`` blocks and ``rhs`` is ``(K, d)``."""
    K, d = rhs.shape
    chol = np.empty_like(diag)
    cross = np.empty_like(upper)
    y = np.empty_like(rhs)
    for k in range(K):
        D = diag[k].copy()
        b = rhs[k].copy()
        if k > 0:
            D -= cross[k - 1].T @ cross[k - 1]
            b -= cross[k - 1].T @ y[k - 1]
        try:
            chol[k] = np.linalg.cholesky(D)
        except np.linalg.LinAlgError as exc:
            raise SingularKKT(f"pivot block {k} is not positive definite") from exc
        y[k] = np.linalg.solve(chol[k], b)
        if k < K - 1:
            cross[k] = np.linalg.solve(chol[k], upper[k])
    x = np.empty_like(rhs)
    for k in range(K - 1, -1, -1):
        b = y[k].copy()
        if k < K - 1:
            b -= cross[k] @ x[k + 1]
        x[k] = np.linalg.solve(chol[k].T, b)
    return x


def solve_frictional_qp(scn: Scenario, n: int) -> QPSolution:
    """Discretised frictional best-response problem of investor ``n``.

    The objective ``int e^{-rt} [q' phi - phi' Q phi / 2 - phi_dot' L phi_dot] dt``
    is built from the price-impact objective with trading costs. Demands
    ``phi_1 .. phi_K`` are the unknowns (``phi_0 = 0``), rates are forward
    differences, the state integral uses the trapezoid rule and each rate
    cost is discounted at the midpoint of its interval. The terminal rate is
    left free; the reported ``terminal_rate`` shows how close to zero the
    optimum brings it.
    """
    inv = scn.investors
    inv.check_index(n)
    market = scn.market
    sigma, cost = market.covariance, market.cost
    N = scn.N
    d_n, d_o = inv.tolerances[n], inv.others_total(n)
    drift = scn.noise_drift
    if inv.equal_tolerances:
        impact_cost = 2.0 / (N - 1)
        impact_drift = 2.0 / (N - 1)
    elif N == 2:
        impact_cost, impact_drift = 2.0, 2.0
    else:
        raise UnequalToleranceUnsupported("heterogeneous tolerances need two investors")
    Q = sigma * (2.0 / d_o + 1.0 / d_n)
    L = cost * (1.0 + impact_cost)
    q = ((scn.zeta_others(n) - scn.psi) / d_o - scn.zeta(n) / d_n) @ sigma \
        + impact_drift * drift @ cost

    grid = scn.grid
    K, dt, d = grid.num_steps, grid.dt, scn.d
    t = grid.nodes
    disc = np.exp(-market.discount_rate * t)
    mid = np.exp(-market.discount_rate * (t[:-1] + 0.5 * dt))  # rate cost of interval k
    w = np.full(K + 1, dt)
    w[-1] = 0.5 * dt
    diag = np.empty((K, d, d))
    upper = np.empty((K - 1, d, d))
    for k in range(1, K + 1):
        rate_terms = mid[k - 1] + (mid[k] if k < K else 0.0)
        diag[k - 1] = w[k] * disc[k] * Q + (2.0 / dt) * rate_terms * L
        if k < K:
            upper[k - 1] = -(2.0 / dt) * mid[k] * L
    rhs = (w * disc)[1:, None] * q[1:]
    phi = np.vstack([np.zeros(d), _block_tridiagonal_solve(diag, upper, rhs)])
    rate = np.diff(phi, axis=0) / dt
    rate = np.vstack([rate, rate[-1]])
    return QPSolution(scn.path(phi), scn.path(rate), float(np.max(np.abs(rate[-1]))))


@dataclass(frozen=True)
class ClearingReport:
    demand_violation: float
    rate_violation: float | None
    tol: float

    @property
    def passed(self) -> bool:
        ok = self.demand_violation <= self.tol
        if self.rate_violation is not None:
            ok = ok and self.rate_violation <= self.tol
        return ok


def verify_clearing(result: EquilibriumResult, noise: NoiseSpec, tol: float = 1e-8) -> ClearingReport:
    t = result.grid.nodes
    total = sum(p.values for p in result.demands) + noise.level_at(t)
    demand = float(np.max(np.abs(total)))
    rate = None
    if result.rates is not None:
        rate = float(np.max(np.abs(sum(p.values for p in result.rates) + noise.rate_at(t))))
    return ClearingReport(demand, rate, tol)


# randomized scenario battery ------------------------------------------------
def random_spd(rng: np.random.Generator, d: int) -> np.ndarray:
    A = rng.normal(size=(d, d)) * 0.2
    return A @ A.T + 0.02 * np.eye(d)


def random_exposure(rng: np.random.Generator, d: int, deterministic: bool = False):
    kinds = ["constant", "polynomial"] if deterministic else ["constant", "polynomial", "ou", "martingale", "sum"]
    kind = kinds[rng.integers(len(kinds))]
    if kind == "constant":
        return Constant(rng.normal(size=d))
    if kind == "polynomial":
        return Deterministic.polynomial(rng.normal(size=(3, d)) * 0.5)
    if kind == "ou":
        return OU(rng.normal(size=d), rng.normal(size=d), rng.uniform(0.5, 3.0),
                  0.3 * np.diag(rng.uniform(0.1, 1.0, size=d)))
    if kind == "martingale":
        return Martingale(rng.normal(size=d), 0.2 * np.diag(rng.uniform(0.1, 1.0, size=d)))
    return Sum((Constant(rng.normal(size=d)), OU(rng.normal(size=d), np.zeros(d), 1.0, 0.2)))


def random_scenario(rng: np.random.Generator, index: int, num_steps: int = 100,
                    deterministic: bool = False) -> Scenario:
    """Scenario ``index`` of the battery. Even indices have equal
    tolerances; the investor count cycles through 2..5 in pairs, so every
    regime, including the heterogeneous two-investor one, is exercised."""
    d = int(rng.integers(1, 4))
    N = 2 + (index // 2) % 4
    market = MarketParams(random_spd(rng, d), rng.uniform(0.05, 0.5, size=d),
                          discount_rate=float(rng.choice([0.0, rng.uniform(0.0, 0.2)])),
                          horizon=float(rng.uniform(0.5, 2.0)))
    if index % 2 == 0:
        tol = np.full(N, rng.uniform(0.5, 3.0))
    else:
        tol = rng.uniform(0.3, 4.0, size=N)
    exposures = [random_exposure(rng, d, deterministic) for _ in range(N)]
    if rng.uniform() < 0.2:
        noise = NoiseSpec.none(d)
    elif rng.uniform() < 0.5:
        noise = NoiseSpec.trig(rng.normal(size=(2, d)), market.horizon)
    else:
        noise = NoiseSpec.polynomial(rng.normal(size=(3, d)), market.horizon)
    return Scenario(market, InvestorSet(tol, exposures), noise,
                    TimeGrid(market.horizon, num_steps), seed=int(rng.integers(2 ** 31)))


def scenario_battery(count: int = 50, seed: int = 20240601, num_steps: int = 100,
                     deterministic: bool = False) -> list[Scenario]:
    rng = np.random.default_rng(seed)
    return [random_scenario(rng, i, num_steps, deterministic) for i in range(count)]
