"""Process classes for exposures and noise demand, their grid realizations and
closed-form conditional expectations.

Every supported class has a conditional mean that separates into a sum of
products ``W(t) * g(s)``: a weight depending only on the state at the
conditioning time ``t`` and a deterministic function of the future time ``s``.
The frictional solver consumes processes in exactly this form (see
:meth:`ProcessSpec.cm_terms`), which keeps every conditional expectation exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from numbers import Integral
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import BadSeed, DimensionMismatch, GridMismatch, TimeOrder, UnsupportedKind

TimeFunction = Callable[[np.ndarray], np.ndarray]
CMTerm = tuple[np.ndarray, TimeFunction]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``0 = t_0 < ... < t_K = T``."""

    horizon: float
    num_steps: int

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if int(self.num_steps) != self.num_steps or self.num_steps < 1:
            raise ValueError(f"num_steps must be a positive integer, got {self.num_steps}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "num_steps", int(self.num_steps))

    @cached_property
    def nodes(self) -> np.ndarray:
        t = np.linspace(0.0, self.horizon, self.num_steps + 1)
        t.flags.writeable = False
        return t

    @property
    def dt(self) -> float:
        return self.horizon / self.num_steps

    def __len__(self):
        return self.num_steps + 1


@dataclass(frozen=True, eq=False)
class PathGrid:
    """Values of a vector process on a :class:`TimeGrid`, shape ``(K+1, d)``.

    ``parts`` holds component paths when the process is a :class:`Sum`; the
    conditional-mean rules need the component states, not only their total.
    """

    grid: TimeGrid
    values: np.ndarray
    parts: tuple["PathGrid", ...] = ()

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != len(self.grid):
            raise GridMismatch(
                f"path has {v.shape[0]} nodes, grid has {len(self.grid)}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("path contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def check_same_grid(*paths: PathGrid) -> TimeGrid:
    grid = paths[0].grid
    for p in paths[1:]:
        if p.grid != grid:
            raise GridMismatch(f"grids differ: {grid} vs {p.grid}")
    return grid


def _ones(u: np.ndarray, dim: int) -> np.ndarray:
    return np.ones((np.size(u), dim))


def _vector(value, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector, got shape {v.shape}")
    return v


def _scale_matrix(scale, dim: int) -> np.ndarray:
    s = np.asarray(scale, dtype=float)
    if s.ndim == 0:
        s = s * np.eye(dim)
    if s.shape != (dim, dim):
        raise DimensionMismatch(f"diffusion scale must be {dim}x{dim}, got {s.shape}")
    return s


class ProcessSpec:
    """Base class for exposure process classes."""

    dim: int
    stochastic: bool = False

    def realize_with(self, grid: TimeGrid, increments: np.ndarray | None) -> PathGrid:
        raise NotImplementedError

    def cm_terms(self, path: PathGrid) -> list[CMTerm]:
        """Separable form of ``E[X(s) | F(t_k)] = sum_j W_j[k] * g_j(s)``.

        Returns a list of ``(W_j, g_j)`` with ``W_j`` of shape ``(K+1, d)``
        and ``g_j`` a vectorised map from times ``(n,)`` to ``(n, d)``.
        """
        raise UnsupportedKind(f"{type(self).__name__} has no conditional-mean rule")

    def parameters_finite(self) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class Constant(ProcessSpec):
    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", _vector(self.value, "value"))

    @property
    def dim(self):
        return self.value.size

    def evaluate(self, t) -> np.ndarray:
        return np.broadcast_to(self.value, (np.size(t), self.dim)).copy()

    def realize_with(self, grid, increments=None):
        return PathGrid(grid, self.evaluate(grid.nodes))

    def cm_terms(self, path):
        return [(np.ones_like(path.values), self.evaluate)]

    def parameters_finite(self):
        return bool(np.all(np.isfinite(self.value)))


@dataclass(frozen=True, eq=False)
class Deterministic(ProcessSpec):
    """A known function of time, ``fn(t) -> (len(t), dim)``."""

    fn: TimeFunction
    dim: int
    label: str = "deterministic"

    def evaluate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.asarray(self.fn(t), dtype=float)
        return np.broadcast_to(out.reshape(t.size, -1), (t.size, self.dim)).copy()

    def realize_with(self, grid, increments=None):
        return PathGrid(grid, self.evaluate(grid.nodes))

    def cm_terms(self, path):
        return [(np.ones_like(path.values), self.evaluate)]

    @classmethod
    def polynomial(cls, coefficients) -> "Deterministic":
        """``x(t) = sum_j c_j t**j`` with ``coefficients`` of shape ``(p, d)``."""
        c = np.atleast_2d(np.asarray(coefficients, dtype=float))
        return cls(lambda t: np.polynomial.polynomial.polyval(t, c).T,
                   c.shape[1], label="polynomial")

    @classmethod
    def from_samples(cls, grid: TimeGrid, values) -> "Deterministic":
        v = np.asarray(values, dtype=float).reshape(len(grid), -1)
        spline = CubicSpline(grid.nodes, v, axis=0)
        return cls(spline, v.shape[1], label="spline")


@dataclass(frozen=True, eq=False)
class Martingale(ProcessSpec):
    """``dX = scale dW``, driven by the scenario's Brownian motion."""

    initial: np.ndarray
    scale: np.ndarray
    stochastic = True

    def __post_init__(self):
        x0 = _vector(self.initial, "initial")
        object.__setattr__(self, "initial", x0)
        object.__setattr__(self, "scale", _scale_matrix(self.scale, x0.size))

    @property
    def dim(self):
        return self.initial.size

    def realize_with(self, grid, increments):
        steps = increments @ self.scale.T
        values = np.vstack([self.initial, self.initial + np.cumsum(steps, axis=0)])
        return PathGrid(grid, values)

    def cm_terms(self, path):
        return [(np.asarray(path.values), lambda u: _ones(u, self.dim))]

    def parameters_finite(self):
        return bool(np.all(np.isfinite(self.initial)) and np.all(np.isfinite(self.scale)))


@dataclass(frozen=True, eq=False)
class OU(ProcessSpec):
    """Ornstein-Uhlenbeck ``dX = reversion (mean - X) dt + scale dW``."""

    initial: np.ndarray
    mean: np.ndarray
    reversion: float
    scale: np.ndarray
    stochastic = True

    def __post_init__(self):
        x0 = _vector(self.initial, "initial")
        theta = np.broadcast_to(_vector(self.mean, "mean"), x0.shape).copy()
        if not self.reversion > 0:
            raise ValueError(f"reversion must be positive, got {self.reversion}")
        object.__setattr__(self, "initial", x0)
        object.__setattr__(self, "mean", theta)
        object.__setattr__(self, "reversion", float(self.reversion))
        object.__setattr__(self, "scale", _scale_matrix(self.scale, x0.size))

    @property
    def dim(self):
        return self.initial.size

    def realize_with(self, grid, increments):
        k, dt = self.reversion, grid.dt
        decay = np.exp(-k * dt)
        # exact transition; the shared increments are rescaled to the OU variance
        shock_scale = np.sqrt(-np.expm1(-2 * k * dt) / (2 * k * dt))
        shocks = shock_scale * increments @ self.scale.T
        values = np.empty((len(grid), self.dim))
        values[0] = self.initial
        for j in range(grid.num_steps):
            values[j + 1] = self.mean + decay * (values[j] - self.mean) + shocks[j]
        return PathGrid(grid, values)

    def cm_terms(self, path):
        k, theta = self.reversion, self.mean
        t = path.grid.nodes
        weight = (path.values - theta) * np.exp(k * t)[:, None]
        return [
            (np.broadcast_to(theta, path.values.shape).copy(), lambda u: _ones(u, self.dim)),
            (weight, lambda u: np.repeat(np.exp(-k * np.atleast_1d(u))[:, None], self.dim, axis=1)),
        ]

    def parameters_finite(self):
        return bool(np.all(np.isfinite(self.initial)) and np.all(np.isfinite(self.mean))
                    and np.isfinite(self.reversion) and np.all(np.isfinite(self.scale)))


@dataclass(frozen=True, eq=False)
class Sum(ProcessSpec):
    parts: tuple[ProcessSpec, ...]

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("Sum needs at least one part")
        if len({p.dim for p in parts}) != 1:
            raise DimensionMismatch("all parts of a Sum must share a dimension")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self):
        return self.parts[0].dim

    @property
    def stochastic(self):
        return any(p.stochastic for p in self.parts)

    def realize_with(self, grid, increments):
        paths = tuple(p.realize_with(grid, increments) for p in self.parts)
        return PathGrid(grid, sum(p.values for p in paths), parts=paths)

    def cm_terms(self, path):
        if len(path.parts) != len(self.parts):
            raise ValueError("Sum path must carry its component paths")
        terms = []
        for spec, part in zip(self.parts, path.parts):
            terms.extend(spec.cm_terms(part))
        return terms

    def parameters_finite(self):
        return all(p.parameters_finite() for p in self.parts)


def brownian_increments(grid: TimeGrid, dim: int, seed) -> np.ndarray:
    if seed is None or isinstance(seed, bool) or not isinstance(seed, Integral) or seed < 0:
        raise BadSeed(f"a non-negative integer seed is required, got {seed!r}")
    rng = np.random.default_rng(int(seed))
    return rng.standard_normal((grid.num_steps, dim)) * np.sqrt(grid.dt)


def realize(spec: ProcessSpec, grid: TimeGrid, seed=None) -> PathGrid:
    """Sample ``spec`` on ``grid``. Deterministic given ``seed``."""
    increments = brownian_increments(grid, spec.dim, seed) if spec.stochastic else None
    return spec.realize_with(grid, increments)


def conditional_mean(spec: ProcessSpec, path: PathGrid, t: int, s: int) -> np.ndarray:
    """``E[X(t_s) | F(t_t)]`` for grid node indices ``s >= t``."""
    if s < t:
        raise TimeOrder(f"s={s} precedes t={t}")
    u = path.grid.nodes[s:s + 1]
    return sum(W[t] * g(u)[0] for W, g in spec.cm_terms(path))


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Deterministic noise-trader demand given through its trading rate.

    ``rate`` is the rate of demand, ``drift`` its time derivative and ``level``
    the demand itself with ``level(0) = 0``. All three map ``(n,)`` times to
    ``(n, dim)`` arrays.
    """

    rate: TimeFunction
    drift: TimeFunction
    level: TimeFunction
    dim: int
    label: str = "custom"

    def _eval(self, fn, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.broadcast_to(np.asarray(fn(t), dtype=float).reshape(t.size, -1),
                               (t.size, self.dim)).copy()

    def rate_at(self, t):
        return self._eval(self.rate, t)

    def drift_at(self, t):
        return self._eval(self.drift, t)

    def level_at(self, t):
        return self._eval(self.level, t)

    @classmethod
    def none(cls, dim: int) -> "NoiseSpec":
        zero = lambda t: np.zeros((np.size(t), dim))
        return cls(zero, zero, zero, dim, label="none")

    @classmethod
    def polynomial(cls, coefficients, horizon: float) -> "NoiseSpec":
        """Rate ``(T - t) * sum_j c_j t**j``; coefficients have shape ``(p, d)``.

        The ``(T - t)`` factor makes the terminal rate vanish by construction.
        """
        c = np.atleast_2d(np.asarray(coefficients, dtype=float))
        P = np.polynomial.Polynomial
        rates = [P([horizon, -1.0]) * P(c[:, i]) for i in range(c.shape[1])]
        drifts = [p.deriv() for p in rates]
        levels = [p.integ(lbnd=0.0) for p in rates]

        def stack(polys):
            return lambda t: np.column_stack([p(t) for p in polys])

        return cls(stack(rates), stack(drifts), stack(levels), c.shape[1], label="polynomial")

    @classmethod
    def trig(cls, coefficients, horizon: float) -> "NoiseSpec":
        """Rate ``sum_j a_j sin(j pi (T - t) / T)``, ``j = 1..p``; shape ``(p, d)``."""
        a = np.atleast_2d(np.asarray(coefficients, dtype=float))
        T = float(horizon)
        freq = np.pi * np.arange(1, a.shape[0] + 1) / T

        def rate(t):
            return np.sin(np.outer(T - t, freq)) @ a

        def drift(t):
            return -(np.cos(np.outer(T - t, freq)) * freq) @ a

        def level(t):
            return ((np.cos(np.outer(T - t, freq)) - np.cos(freq * T)) / freq) @ a

        return cls(rate, drift, level, a.shape[1], label="trig")

    @classmethod
    def from_rate(cls, rate: TimeFunction, drift: TimeFunction, dim: int,
                  quad_points: int = 32) -> "NoiseSpec":
        """Noise from an arbitrary smooth rate; the level is integrated by
        Gauss-Legendre quadrature on ``[0, t]``."""
        x, w = np.polynomial.legendre.leggauss(quad_points)
        x, w = (x + 1) / 2, w / 2

        def level(t):
            t = np.atleast_1d(t)
            pts = np.outer(t, x)
            vals = np.asarray(rate(pts.ravel()), dtype=float).reshape(t.size, quad_points, dim)
            return t[:, None] * np.einsum("q,nqd->nd", w, vals)

        return cls(rate, drift, level, dim, label="from_rate")


class AffineProcess:
    """Affine functional of the investors' exposures,
    ``x(t) = sum_i f_i(t) @ M_i + sum_m zeta_m(t) @ C_m``.

    Uses the row-vector convention of ``(K+1, d)`` path arrays, so formulas
    written for arrays (``(zeta - psi) @ Sigma / delta``) apply unchanged to
    an ``AffineProcess``. Conditional means stay exact because the map is
    linear in the exposures.
    """

    __array_ufunc__ = None  # make ndarray defer to our reflected operators

    def __init__(self, dim: int, num_exposures: int,
                 offsets: Sequence[tuple[np.ndarray, TimeFunction]] = (),
                 coefs: Sequence[np.ndarray | None] | None = None):
        self.dim = int(dim)
        self.num_exposures = int(num_exposures)
        self.offsets = tuple((np.asarray(M, dtype=float), fn) for M, fn in offsets)
        self.coefs = tuple(coefs) if coefs is not None else (None,) * self.num_exposures
        if len(self.coefs) != self.num_exposures:
            raise DimensionMismatch("one coefficient block per exposure expected")

    @classmethod
    def exposure(cls, m: int, num_exposures: int, dim: int) -> "AffineProcess":
        coefs = [None] * num_exposures
        coefs[m] = np.eye(dim)
        return cls(dim, num_exposures, coefs=coefs)

    @classmethod
    def deterministic(cls, fn: TimeFunction, dim: int, num_exposures: int) -> "AffineProcess":
        return cls(dim, num_exposures, offsets=[(np.eye(dim), fn)])

    @classmethod
    def zero(cls, dim: int, num_exposures: int) -> "AffineProcess":
        return cls(dim, num_exposures)

    @classmethod
    def stack(cls, blocks: Sequence["AffineProcess"]) -> "AffineProcess":
        """Concatenate vector processes: ``[x_1, ..., x_N]`` of total dimension."""
        dims = [b.dim for b in blocks]
        total = sum(dims)
        n_exp = blocks[0].num_exposures
        offsets, coefs = [], [None] * n_exp
        start = 0
        for b, d in zip(blocks, dims):
            for M, fn in b.offsets:
                big = np.zeros((M.shape[0], total))
                big[:, start:start + d] = M
                offsets.append((big, fn))
            for m, C in enumerate(b.coefs):
                if C is None:
                    continue
                if coefs[m] is None:
                    coefs[m] = np.zeros((C.shape[0], total))
                coefs[m][:, start:start + d] += C
            start += d
        return cls(total, n_exp, offsets, coefs)

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "AffineProcess"):
        if other.dim != self.dim or other.num_exposures != self.num_exposures:
            raise DimensionMismatch("incompatible affine processes")

    def __add__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        if not isinstance(other, AffineProcess):
            return NotImplemented
        self._check(other)
        coefs = []
        for a, b in zip(self.coefs, other.coefs):
            coefs.append(a if b is None else b if a is None else a + b)
        return AffineProcess(self.dim, self.num_exposures, self.offsets + other.offsets, coefs)

    __radd__ = __add__

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        c = float(c)
        return AffineProcess(
            self.dim, self.num_exposures,
            [(c * M, fn) for M, fn in self.offsets],
            [None if C is None else c * C for C in self.coefs],
        )

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        if not isinstance(other, AffineProcess):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __matmul__(self, M):
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != self.dim:
            raise DimensionMismatch(f"cannot apply {M.shape} to dimension {self.dim}")
        return AffineProcess(
            M.shape[1], self.num_exposures,
            [(A @ M, fn) for A, fn in self.offsets],
            [None if C is None else C @ M for C in self.coefs],
        )

    # evaluation -----------------------------------------------------------
    def on_grid(self, grid: TimeGrid, exposure_paths: Sequence[PathGrid]) -> np.ndarray:
        t = grid.nodes
        out = np.zeros((len(grid), self.dim))
        for M, fn in self.offsets:
            out += np.asarray(fn(t), dtype=float).reshape(len(grid), -1) @ M
        for C, path in zip(self.coefs, exposure_paths):
            if C is not None:
                out += path.values @ C
        return out

    def cm_terms(self, exposure_specs: Sequence[ProcessSpec],
                 exposure_paths: Sequence[PathGrid]):
        """Conditional-mean terms ``(A, W, g)`` meaning
        ``E[x(s) | F(t_k)] = sum A @ (W[k] * g(s))`` (column convention)."""
        grid = exposure_paths[0].grid if exposure_paths else None
        terms = []
        for M, fn in self.offsets:
            k = M.shape[0]
            W = np.ones((len(grid), k))
            terms.append((M.T, W, lambda u, fn=fn, k=k: np.asarray(fn(u), dtype=float).reshape(np.size(u), k)))
        for C, spec, path in zip(self.coefs, exposure_specs, exposure_paths):
            if C is None:
                continue
            for W, g in spec.cm_terms(path):
                terms.append((C.T, W, g))
        return terms


__all__ = [
    "TimeGrid", "PathGrid", "ProcessSpec", "Constant", "Deterministic", "Martingale",
    "OU", "Sum", "NoiseSpec", "AffineProcess", "realize", "conditional_mean",
    "brownian_increments", "check_same_grid",
]
