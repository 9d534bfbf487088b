"""Spectral kernel of the linear tracking FBSDE and its explicit solver.

The problem solved here, in column convention, is

    d(Xdot) = [B (X - xi) + r Xdot] dt + dM,   X(0) = 0,   Xdot(T) = 0,

with ``B`` diagonalisable with positive eigenvalues. In the eigenbasis of
``B`` it decouples into scalar problems. For an eigenvalue ``b`` write
``rho = b + r**2/4``, ``a = sqrt(rho)``, ``tau = T - t`` and

    h(t) = rho cosh(a tau) + (r/2) a sinh(a tau).

Then ``f = b a sinh(a tau) / h`` is the feedback gain, the filtered target is

    xi~(t) = (b / h(t)) * int_t^T h(u) exp(-r(u-t)/2) E[xi(u) | F(t)] du,

the state is ``X(t) = int_0^t (h(t)/h(s)) exp(r(t-s)/2) xi~(s) ds`` and the
rate is ``Xdot = xi~ - f X``. Conditional means come in separable form
``sum_j A_j (W_j(t) * g_j(u))``, so each time integral is a deterministic
integral of ``g_j`` that is evaluated by composite Gauss-Legendre
quadrature. Everything is linear in the target, which is what makes market
clearing hold to rounding error.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

import numpy as np

from .errors import SpectralFailure
from .model import MarketParams
from .paths import TimeGrid


@dataclass(frozen=True, eq=False)
class FrictionKernel:
    """``B = V diag(eigenvalues) V^{-1}`` together with ``r`` and ``T``."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    discount_rate: float
    horizon: float

    def __post_init__(self):
        b = np.asarray(self.eigenvalues, dtype=float)
        if not np.all(np.isfinite(b)) or not np.all(b > 0):
            raise SpectralFailure(f"kernel eigenvalues must be positive, got {b}")

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def B(self) -> np.ndarray:
        return (self.vectors * self.eigenvalues) @ self.inverse

    @property
    def rho(self) -> np.ndarray:
        """Eigenvalues of ``Delta = B + (r^2/4) I``."""
        return self.eigenvalues + 0.25 * self.discount_rate ** 2

    @property
    def Delta(self) -> np.ndarray:
        return self.B + 0.25 * self.discount_rate ** 2 * np.eye(self.dim)

    def _mat(self, diag: np.ndarray) -> np.ndarray:
        return (self.vectors * diag) @ self.inverse

    # scalar functions per eigenvalue, broadcast over times ---------------
    def _tau(self, t) -> np.ndarray:
        return (self.horizon - np.asarray(t, dtype=float))[..., None]

    def log_h(self, t) -> np.ndarray:
        """``log h_i(t)``, shape ``t.shape + (n,)``, overflow free."""
        tau = self._tau(t)
        rho = self.rho
        a = np.sqrt(rho)
        e = np.exp(-2.0 * a * tau)
        core = 0.5 * (rho * (1.0 + e) + 0.5 * self.discount_rate * a * (-np.expm1(-2.0 * a * tau)))
        return a * tau + np.log(core)

    def gain(self, t) -> np.ndarray:
        """Feedback gain ``f_i(t)``; the eigenvalues of ``F(t)``."""
        tau = self._tau(t)
        rho = self.rho
        a = np.sqrt(rho)
        e = np.exp(-2.0 * a * tau)
        one_minus = -np.expm1(-2.0 * a * tau)
        core = 0.5 * (rho * (1.0 + e) + 0.5 * self.discount_rate * a * one_minus)
        return self.eigenvalues * a * 0.5 * one_minus / core

    # matrix functions -----------------------------------------------------
    def G(self, t: float) -> np.ndarray:
        """``cosh(sqrt(Delta) (T - t))``."""
        a = np.sqrt(self.rho)
        return self._mat(np.cosh(a * (self.horizon - t)))

    def G_dot(self, t: float) -> np.ndarray:
        """Time derivative of ``G``: ``-sqrt(Delta) sinh(sqrt(Delta) (T - t))``."""
        a = np.sqrt(self.rho)
        return self._mat(-a * np.sinh(a * (self.horizon - t)))

    def F(self, t: float) -> np.ndarray:
        return self._mat(self.gain(np.asarray(t, dtype=float)))

    def F_direct(self, t: float) -> np.ndarray:
        """``F = -(Delta G - (r/2) G_dot)^{-1} B G_dot`` from the matrix
        functions, without the scalar reduction."""
        H = self.Delta @ self.G(t) - 0.5 * self.discount_rate * self.G_dot(t)
        return -np.linalg.solve(H, self.B @ self.G_dot(t))


def _similarity(market: MarketParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenpairs of ``Lambda^{-1} Sigma`` through the symmetric matrix
    ``Lambda^{-1/2} Sigma Lambda^{-1/2}``."""
    lam = np.diag(market.cost)
    root = np.sqrt(lam)
    S = market.covariance / np.outer(root, root)
    try:
        s, Q = np.linalg.eigh(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:
        raise SpectralFailure(str(exc)) from exc
    return s, Q / root[:, None], Q.T * root[None, :]


def build_kernel(market: MarketParams, delta_bar: float, factor: float = 0.5) -> FrictionKernel:
    """Kernel for ``B = factor * Lambda^{-1} Sigma / delta_bar``; the default
    factor gives ``Lambda^{-1} Sigma / (2 delta_bar)``."""
    s, V, Vinv = _similarity(market)
    return FrictionKernel(factor * s / delta_bar, V, Vinv, market.discount_rate, market.horizon)


def unit_kernel(market: MarketParams, scale: float) -> FrictionKernel:
    """Kernel for ``scale * Lambda^{-1} Sigma``."""
    s, V, Vinv = _similarity(market)
    return FrictionKernel(scale * s, V, Vinv, market.discount_rate, market.horizon)


def kronecker_kernel(C: np.ndarray, unit: FrictionKernel,
                     eigen: tuple[np.ndarray, np.ndarray] | None = None) -> FrictionKernel:
    """Kernel of ``C (x) B_unit`` from the eigenpairs of both factors.

    ``eigen`` supplies ``(values, vectors)`` of ``C`` when they are known in
    closed form; otherwise ``C`` is diagonalised numerically.
    """
    C = np.asarray(C, dtype=float)
    if eigen is not None:
        c, U = (np.asarray(x, dtype=float) for x in eigen)
        Uinv = np.linalg.inv(U)
    elif np.allclose(C, C.T, rtol=0, atol=1e-14 * np.abs(C).max()):
        c, U = np.linalg.eigh(C)
        Uinv = U.T
    else:
        c, U = np.linalg.eig(C)
        if np.any(np.abs(np.imag(c)) > 0):
            raise SpectralFailure("coupling matrix has complex eigenvalues")
        c, U = np.real(c), np.real(U)
        Uinv = np.linalg.inv(U)
    return FrictionKernel(
        np.kron(c, unit.eigenvalues), np.kron(U, unit.vectors), np.kron(Uinv, unit.inverse),
        unit.discount_rate, unit.horizon,
    )


def cosh_series(Delta: np.ndarray, tau: float, terms: int = 30) -> np.ndarray:
    """``cosh(sqrt(Delta) tau)`` by its power series in ``Delta``."""
    out = np.zeros_like(Delta)
    power = np.eye(Delta.shape[0])
    for k in range(terms):
        out = out + power * tau ** (2 * k) / factorial(2 * k)
        power = power @ Delta
    return out


def sinh_series(Delta: np.ndarray, tau: float, terms: int = 30) -> np.ndarray:
    """``sqrt(Delta) sinh(sqrt(Delta) tau)`` by its power series in ``Delta``."""
    out = np.zeros_like(Delta)
    power = Delta.copy()
    for k in range(terms):
        out = out + power * tau ** (2 * k + 1) / factorial(2 * k + 1)
        power = power @ Delta
    return out


@dataclass(frozen=True, eq=False)
class FBSDESolution:
    state: np.ndarray
    rate: np.ndarray
    filtered_target: np.ndarray


def solve_linear_fbsde(kernel: FrictionKernel, terms: Sequence, grid: TimeGrid,
                       order: int = 8) -> FBSDESolution:
    """Explicit solution on ``grid`` for a target with conditional means
    ``E[xi(u) | F(t_k)] = sum_j A_j @ (W_j[k] * g_j(u))``.

    Parameters
    ----------
    kernel : FrictionKernel
        Spectral data of ``B`` (dimension ``n``).
    terms : sequence of (A, W, g)
        ``A`` is ``(n, c)``, ``W`` is ``(K+1, c)`` and ``g`` maps times of
        shape ``(m,)`` to ``(m, c)``.
    grid : TimeGrid
    order : int
        Gauss-Legendre points per grid interval.

    Returns
    -------
    FBSDESolution
        State ``X``, rate ``Xdot`` and filtered target, each ``(K+1, n)``.
    """
    if grid.horizon != kernel.horizon:
        raise ValueError("grid and kernel horizons differ")
    K, dt, n = grid.num_steps, grid.dt, kernel.dim
    r = kernel.discount_rate
    t = grid.nodes
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1.0), 0.5 * w

    pts = t[:-1, None] + dt * x[None, :]                                   # (K, p)
    span = dt * (1.0 - x)                                                  # (p,)
    sub = pts[:, :, None] + span[None, :, None] * x[None, None, :]         # (K, p, p)

    # L = log h - r u / 2 gives the backward weight exp(L(u) - L(s)) <= 1
    L_nodes = kernel.log_h(t) - 0.5 * r * t[:, None]                       # (K+1, n)
    L_pts = kernel.log_h(pts) - 0.5 * r * pts[..., None]                   # (K, p, n)
    L_sub = kernel.log_h(sub) - 0.5 * r * sub[..., None]                   # (K, p, p, n)

    E_int = np.exp(L_pts - L_nodes[:-1, None, :])                          # node k -> points
    E_sub = np.exp(L_sub - L_pts[:, :, None, :])                           # point -> sub points
    E_end = np.exp(L_nodes[1:, None, :] - L_pts)                           # point -> node k+1
    E_step = np.exp(L_nodes[1:] - L_nodes[:-1])                            # node k -> node k+1

    tp_nodes = np.zeros((K + 1, n))
    tp_pts = np.zeros((K, p := order, n))
    for A, W, g in terms:
        A = np.asarray(A, dtype=float)
        P = kernel.inverse @ A                                             # (n, c)
        c = P.shape[1]
        g_pts = np.asarray(g(pts.ravel()), dtype=float).reshape(K, p, c)
        g_sub = np.asarray(g(sub.ravel()), dtype=float).reshape(K, p, p, c)
        whole = dt * np.einsum("q,kqn,kqc->knc", w, E_int, g_pts)          # (K, n, c)
        part = np.einsum("r,q,kqrn,kqrc->kqnc", w, span, E_sub, g_sub)     # (K, p, n, c)
        I_nodes = np.zeros((K + 1, n, c))
        for k in range(K - 1, -1, -1):
            I_nodes[k] = whole[k] + E_step[k][:, None] * I_nodes[k + 1]
        I_pts = part + E_end[..., None] * I_nodes[1:, None, :, :]
        W = np.asarray(W, dtype=float)
        W_pts = (1.0 - x)[None, :, None] * W[:-1, None, :] + x[None, :, None] * W[1:, None, :]
        tp_nodes += np.einsum("nc,kc,knc->kn", P, W, I_nodes)
        tp_pts += np.einsum("nc,kqc,kqnc->kqn", P, W_pts, I_pts)
    tp_nodes *= kernel.eigenvalues
    tp_pts *= kernel.eigenvalues

    # M = log h + r t / 2 gives the forward weight exp(M(t) - M(s)) <= 1
    M_nodes = kernel.log_h(t) + 0.5 * r * t[:, None]
    M_pts = kernel.log_h(pts) + 0.5 * r * pts[..., None]
    F_step = np.exp(M_nodes[1:] - M_nodes[:-1])
    F_pts = np.exp(M_nodes[1:, None, :] - M_pts)
    y = np.zeros((K + 1, n))
    for k in range(K):
        y[k + 1] = F_step[k] * y[k] + dt * np.einsum("q,qn,qn->n", w, F_pts[k], tp_pts[k])
    ydot = tp_nodes - kernel.gain(t) * y

    V = kernel.vectors
    return FBSDESolution(y @ V.T, ydot @ V.T, tp_nodes @ V.T)


def fbsde_residual(B: np.ndarray, target: np.ndarray, state: np.ndarray, rate: np.ndarray,
                   discount_rate: float, grid: TimeGrid) -> np.ndarray:
    """Central-difference residual ``Xddot - B (X - target) - r Xdot`` at the
    interior nodes, shape ``(K-1, n)``."""
    dt = grid.dt
    accel = (rate[2:] - rate[:-2]) / (2.0 * dt)
    mid = slice(1, -1)
    return accel - (state[mid] - target[mid]) @ np.asarray(B).T - discount_rate * rate[mid]
