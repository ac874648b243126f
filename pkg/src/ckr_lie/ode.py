"""Explicit Runge-Kutta integration of CKR flows and linear systems.

Two methods are available: classical fixed-step RK4 and adaptive
Dormand-Prince 5(4).  Blow-up (a state component exceeding a threshold) is
a normal termination status, not an error, because Riccati flows genuinely
reach moving poles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import make_interp_spline

from .errors import ExprDomainError, InvariantError, NumericalError
from .expr import Expr, as_expr, evaluate

COMPLETED = "completed"
BLOW_UP = "blow-up"
STEP_LIMIT = "step-limit"


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    ``method`` is ``"rk4"`` (fixed step ``h``) or ``"rk45"`` (adaptive,
    tolerances ``atol``/``rtol``).  ``blowup`` is the threshold on the
    largest state component.
    """

    method: str = "rk4"
    h: float = 1e-3
    atol: float = 1e-10
    rtol: float = 1e-10
    blowup: float = 1e8
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise InvariantError("integrator.method", f"unknown method {self.method!r}")
        if not self.h > 0:
            raise InvariantError("integrator.h", "step size must be positive")
        if not (self.atol > 0 and self.rtol > 0):
            raise InvariantError("integrator.tolerance", "tolerances must be positive")
        if not self.blowup > 0:
            raise InvariantError("integrator.blowup", "threshold must be positive")
        if self.max_steps < 1:
            raise InvariantError("integrator.max_steps", "must be at least 1")

    @property
    def tolerance(self) -> float:
        """Nominal accuracy scale of a run with this configuration."""
        if self.method == "rk4":
            return self.h**4
        return max(self.atol, self.rtol)


@dataclass(frozen=True)
class SampledPath:
    """Samples ``values[k]`` of a vector function at strictly monotone ``x[k]``.

    Calling the path interpolates linearly between nodes.
    """

    x: np.ndarray
    values: np.ndarray
    status: str = COMPLETED
    x_stop: float | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None]
        if x.ndim != 1 or v.shape[0] != x.size:
            raise ValueError("x and values must have matching lengths")
        if x.size > 1:
            dx = np.diff(x)
            if not (np.all(dx > 0) or np.all(dx < 0)):
                raise InvariantError("sampled_path.monotone", "x must be strictly monotone")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)

    @property
    def n_components(self) -> int:
        return self.values.shape[1]

    def component(self, j: int) -> "SampledPath":
        return SampledPath(self.x, self.values[:, j], self.status, self.x_stop)

    def _ascending(self):
        if self.x.size > 1 and self.x[1] < self.x[0]:
            return self.x[::-1], self.values[::-1]
        return self.x, self.values

    def __call__(self, xq):
        """Linear interpolation; shape ``xq.shape + (n_components,)``.

        Single-component paths return ``xq.shape``.
        """
        xs, vs = self._ascending()
        xq_arr = np.asarray(xq, dtype=float)
        lo, hi = xs[0], xs[-1]
        span = hi - lo
        if np.any(xq_arr < lo - 1e-12 * (1 + span)) or np.any(
            xq_arr > hi + 1e-12 * (1 + span)
        ):
            raise ValueError("query outside the sampled interval")
        cols = [np.interp(xq_arr, xs, vs[:, j]) for j in range(vs.shape[1])]
        if np.iscomplexobj(vs):
            cols = [
                np.interp(xq_arr, xs, vs[:, j].real) + 1j * np.interp(xq_arr, xs, vs[:, j].imag)
                for j in range(vs.shape[1])
            ]
        out = np.stack(cols, axis=-1)
        return out[..., 0] if vs.shape[1] == 1 else out

    def spline(self):
        """Interpolating spline through the samples (quintic when n >= 6)."""
        xs, vs = self._ascending()
        k = min(5, xs.size - 1)
        if k == 4:
            k = 3
        return make_interp_spline(xs, vs, k=k, axis=0)

    def derivative(self, xq):
        """Derivative of :meth:`spline`.

        Independent of whatever right-hand side produced the samples, which
        makes it usable for residual checks.
        """
        d = self.spline()(np.asarray(xq, dtype=float), 1)
        return d[..., 0] if self.values.shape[1] == 1 else d


@dataclass(frozen=True)
class Trajectory:
    """Sampled CKR solution ``(x_k, p1_k, p2_k)`` with a termination status."""

    x: np.ndarray
    p: np.ndarray
    status: str = COMPLETED
    x_stop: float | None = None

    @property
    def p1(self) -> np.ndarray:
        return self.p[:, 0]

    @property
    def p2(self) -> np.ndarray:
        return self.p[:, 1]

    def as_path(self) -> SampledPath:
        return SampledPath(self.x, self.p, self.status, self.x_stop)

    def __call__(self, xq):
        return self.as_path()(xq)


# -- core integrator -----------------------------------------------------------

# Dormand-Prince 5(4)
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


@dataclass
class _Result:
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)
    status: str = COMPLETED
    x_stop: float | None = None


class VectorField:
    """Right-hand side ``f(x, y) = rhs(coefficients(x), y)``.

    Splitting out the x-only part lets the fixed-step integrator evaluate
    every coefficient on all stage abscissae in one vectorized call.
    """

    def __init__(self, coefficients: Callable, rhs: Callable):
        self.coefficients = coefficients
        self.rhs = rhs

    def __call__(self, x, y):
        return self.rhs(self.coefficients(x), y)


def _too_big(y, threshold):
    return not np.all(np.isfinite(y)) or np.max(np.abs(y)) > threshold


def _rk4(field_: VectorField, x0, y0, x1, cfg: IntegratorConfig) -> _Result:
    n = max(1, int(math.ceil(abs(x1 - x0) / cfg.h - 1e-9)))
    if n > cfg.max_steps:
        n_run = cfg.max_steps
    else:
        n_run = n
    h = (x1 - x0) / n
    xs = x0 + h * np.arange(n_run + 1)
    if n_run == n:
        xs[-1] = x1
    half = xs[:-1] + 0.5 * h
    pre = None
    try:
        c_nodes = field_.coefficients(xs)
        c_half = field_.coefficients(half)
        pre = (c_nodes, c_half)
    except ExprDomainError:
        pre = None  # fall back to pointwise evaluation to locate the failure

    res = _Result(x=[xs[0]], y=[np.array(y0, dtype=float)])
    y = res.y[0]
    for k in range(n_run):
        if pre is not None:
            ck, cm, cn = (
                _take(pre[0], k),
                _take(pre[1], k),
                _take(pre[0], k + 1),
            )
        else:
            ck = field_.coefficients(xs[k])
            cm = field_.coefficients(half[k])
            cn = field_.coefficients(xs[k + 1])
        k1 = field_.rhs(ck, y)
        k2 = field_.rhs(cm, y + 0.5 * h * k1)
        k3 = field_.rhs(cm, y + 0.5 * h * k2)
        k4 = field_.rhs(cn, y + h * k3)
        with np.errstate(all="ignore"):
            y_new = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if _too_big(y_new, cfg.blowup):
            res.status = BLOW_UP
            res.x_stop = float(xs[k + 1])
            return res
        y = y_new
        res.x.append(xs[k + 1])
        res.y.append(y)
    if n_run < n:
        res.status = STEP_LIMIT
        res.x_stop = float(xs[-1])
    return res


def _take(c, k):
    if isinstance(c, tuple):
        return tuple(_take(ci, k) for ci in c)
    return c[k]


def _rk45(field_: VectorField, x0, y0, x1, cfg: IntegratorConfig) -> _Result:
    direction = 1.0 if x1 >= x0 else -1.0
    span = abs(x1 - x0)
    y = np.array(y0, dtype=float)
    res = _Result(x=[x0], y=[y])
    if span == 0:
        return res
    x = x0
    h = min(cfg.h, span)
    k1 = field_(x, y)
    steps = 0
    h_min = 1e-14 * max(1.0, abs(x0), abs(x1))
    while direction * (x1 - x) > 1e-15 * max(1.0, abs(x1)):
        if steps >= cfg.max_steps:
            res.status = STEP_LIMIT
            res.x_stop = float(x)
            return res
        h = min(h, abs(x1 - x))
        hs = direction * h
        ks = [k1]
        for i in range(1, 7):
            yi = y + hs * sum(a * kj for a, kj in zip(_DP_A[i], ks) if a != 0.0)
            ks.append(field_(x + _DP_C[i] * hs, yi))
        with np.errstate(all="ignore"):
            y_new = y + hs * sum(b * kj for b, kj in zip(_DP_B, ks) if b != 0.0)
            err = hs * sum(e * kj for e, kj in zip(_DP_E, ks) if e != 0.0)
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        steps += 1
        if not np.isfinite(err_norm):
            err_norm = np.inf
        if err_norm <= 1.0:
            x_new = x + hs
            if direction * (x1 - x_new) < 1e-15 * max(1.0, abs(x1)):
                x_new = x1
            if _too_big(y_new, cfg.blowup):
                res.status = BLOW_UP
                res.x_stop = float(x_new)
                return res
            x, y = x_new, y_new
            res.x.append(x)
            res.y.append(y)
            k1 = ks[6]
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** (-0.2))
            h *= max(0.2, factor)
        else:
            if _too_big(y_new, cfg.blowup) and h <= h_min:
                res.status = BLOW_UP
                res.x_stop = float(x + hs)
                return res
            h *= max(0.1, 0.9 * err_norm ** (-0.2)) if np.isfinite(err_norm) else 0.1
            if h < h_min:
                res.status = BLOW_UP
                res.x_stop = float(x)
                return res
    return res


def integrate(field_: VectorField, x0: float, y0, x1: float, cfg: IntegratorConfig):
    """Integrate ``y' = field_(x, y)`` from ``x0`` to ``x1``.

    Returns ``(x, y, status, x_stop)`` with ``x`` of shape ``(n,)`` and
    ``y`` of shape ``(n, dim)``; every stored sample is finite.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if _too_big(y0, cfg.blowup):
        raise NumericalError("initial state exceeds the blow-up threshold", x0)
    if x1 == x0:
        return np.array([x0]), y0[None, :], COMPLETED, None
    run = _rk4 if cfg.method == "rk4" else _rk45
    res = run(field_, float(x0), y0, float(x1), cfg)
    return np.asarray(res.x, dtype=float), np.vstack(res.y), res.status, res.x_stop


# -- CKR flow -------------------------------------------------------------------

def ckr_rhs(a, p):
    """CKR field for coefficient values ``a = (a1, a2, a3)`` at state ``p``."""
    a1, a2, a3 = a
    p1, p2 = p[0], p[1]
    return np.array(
        [a2 * p1 + 2.0 * a3 * p1 * p2, a1 + a2 * p2 + a3 * (p2 * p2 - p1 * p1)]
    )


def integrate_ckr(coefficients, x0: float, p0, x1: float, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the planar CKR system

    ``p1' = a2 p1 + 2 a3 p1 p2``, ``p2' = a1 + a2 p2 + a3 (p2^2 - p1^2)``

    from ``p0 = (p1, p2)`` at ``x0`` to ``x1``.

    ``coefficients`` is a :class:`~ckr_lie.model.CkrCoefficients` (or any
    object with ``a1, a2, a3`` expressions).  A domain error in a
    coefficient propagates as :class:`ExprDomainError` with the offending x.
    """
    cfg = cfg or IntegratorConfig()
    a = [as_expr(coefficients.a1), as_expr(coefficients.a2), as_expr(coefficients.a3)]

    def coeffs(x):
        return tuple(evaluate(ai, x) for ai in a)

    xs, ps, status, x_stop = integrate(VectorField(coeffs, ckr_rhs), x0, p0, x1, cfg)
    return Trajectory(xs, ps, status, x_stop)


# -- linear systems ---------------------------------------------------------------

@dataclass(frozen=True)
class LinearSystem:
    """``y' = A(x) y + b(x)`` with entries given as expressions or numbers.

    ``matrix`` is an ``n x n`` nested sequence and ``forcing`` a length-``n``
    sequence (or ``None``).  Entries may also be vectorized callables of x.
    """

    matrix: Sequence[Sequence]
    forcing: Sequence | None = None

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def _entry(self, e, x):
        if isinstance(e, (int, float)):
            return np.full(np.shape(x), float(e)) if np.ndim(x) else float(e)
        if isinstance(e, Expr):
            return evaluate(e, x)
        return e(x)

    def evaluate(self, x):
        n = self.dim
        A = np.empty(np.shape(x) + (n, n))
        for i, row in enumerate(self.matrix):
            for j, e in enumerate(row):
                A[..., i, j] = self._entry(e, x)
        b = np.zeros(np.shape(x) + (n,))
        if self.forcing is not None:
            for i, e in enumerate(self.forcing):
                b[..., i] = self._entry(e, x)
        return A, b


def _linear_rhs(c, y):
    A, b = c
    return A @ y + b


def integrate_linear(system: LinearSystem, x0: float, y0, x1: float, cfg: IntegratorConfig | None = None) -> SampledPath:
    """Integrate a linear non-autonomous system; result as a :class:`SampledPath`."""
    cfg = cfg or IntegratorConfig()
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if y0.size != system.dim:
        raise ValueError(f"initial vector has {y0.size} components, system has {system.dim}")
    xs, ys, status, x_stop = integrate(VectorField(system.evaluate, _linear_rhs), x0, y0, x1, cfg)
    return SampledPath(xs, ys, status, x_stop)


# -- quadrature -------------------------------------------------------------------

def _grid(x0, x1, grid) -> np.ndarray:
    if grid is None:
        grid = 1001
    if np.ndim(grid) == 0:
        n = int(grid)
        if n < 2:
            raise ValueError("grid needs at least two points")
        return np.linspace(x0, x1, n)
    xs = np.asarray(grid, dtype=float)
    return xs


def antiderivative(f, x0: float, x1: float, grid=None) -> SampledPath:
    """Cumulative integral ``F(x) = int_{x0}^{x} f`` on a grid (``F(x0) = 0``).

    For expressions and callables each panel is integrated with Simpson's
    rule using the panel midpoint; sampled paths are integrated from their
    own nodes with cumulative Simpson weights and then interpolated onto
    ``grid`` when one is given.
    """
    if isinstance(f, SampledPath):
        xs, vs = f.x, f.values
        F = np.zeros_like(vs, dtype=vs.dtype)
        if xs.size >= 3:
            F[1:] = cumulative_simpson(vs.real, x=xs, axis=0)
            if np.iscomplexobj(vs):
                F[1:] += 1j * cumulative_simpson(vs.imag, x=xs, axis=0)
        elif xs.size == 2:
            F[1] = 0.5 * (xs[1] - xs[0]) * (vs[0] + vs[1])
        out = SampledPath(xs, F)
        if abs(xs[0] - x0) > 1e-12 * (1 + abs(x0)):
            out = SampledPath(xs, F - out(x0))
        if grid is None:
            return out
        g = _grid(x0, x1, grid)
        return SampledPath(g, out(g))

    if isinstance(f, (str, int, float)):
        f = as_expr(f)
    fn = (lambda x: evaluate(f, x)) if isinstance(f, Expr) else f
    xs = _grid(x0, x1, grid)
    fx = np.asarray(fn(xs), dtype=float)
    fm = np.asarray(fn(0.5 * (xs[:-1] + xs[1:])), dtype=float)
    if fx.ndim == 0:
        fx = np.full(xs.shape, float(fx))
        fm = np.full(xs.size - 1, float(fm))
    panels = np.diff(xs)[(...,) + (None,) * (fx.ndim - 1)] / 6.0 * (fx[:-1] + 4 * fm + fx[1:])
    F = np.concatenate([np.zeros((1,) + fx.shape[1:]), np.cumsum(panels, axis=0)])
    return SampledPath(xs, F)
