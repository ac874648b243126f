"""Lie integrals of CKR systems and the constraints that make them closed-form.

A Lie integral ``U(x, q) = U1(x) H1(q) + U2(x) H2(q) + U3(x) H3(q)`` is
constant along every CKR trajectory when its coefficients solve the Euler
triplet

    U1' = a2 U1 - a1 U2
    U2' = 2 (a3 U1 - a1 U3)
    U3' = a3 U2 - a2 U3.

Setting ``U2 = 0`` gives closed forms in each physical case, valid only
when ``a3 U1 = a1 U3``.  That condition turns into an equation for the
gauge function sigma (Case I), for the mass profile (Case II) or for the
Swanson ladder function alpha1 (Case III); solvers for each are below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ChartDomainError, InvariantError, NumericalError
from .expr import X, Const, Expr, as_expr, differentiate, evaluate, func
from .geometry import EPS_DOM, hamiltonian
from .model import CkrCoefficients, SwansonParams, swanson_reduce
from .ode import (
    IntegratorConfig,
    SampledPath,
    Trajectory,
    VectorField,
    _grid,
    antiderivative,
    integrate,
    integrate_linear,
    LinearSystem,
)


@dataclass(frozen=True)
class UpsilonTriple:
    """Coefficients ``(U1, U2, U3)`` of a candidate Lie integral.

    Each component is an :class:`Expr` or a one-component
    :class:`SampledPath` (queried by linear interpolation).
    """

    u1: object
    u2: object
    u3: object

    def __post_init__(self):
        for name in ("u1", "u2", "u3"):
            v = getattr(self, name)
            if not isinstance(v, SampledPath):
                object.__setattr__(self, name, as_expr(v))

    @classmethod
    def from_path(cls, path: SampledPath) -> "UpsilonTriple":
        return cls(path.component(0), path.component(1), path.component(2))

    def __iter__(self):
        return iter((self.u1, self.u2, self.u3))

    def coefficients(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cols = [
            evaluate(c, x) if isinstance(c, Expr) else c(x)
            for c in self
        ]
        return np.stack(np.broadcast_arrays(*cols), axis=-1)

    def derivatives(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cols = [
            evaluate(differentiate(c), x) if isinstance(c, Expr) else c.derivative(x)
            for c in self
        ]
        return np.stack(np.broadcast_arrays(*cols), axis=-1)

    def __call__(self, x, q, eps: float = EPS_DOM):
        """``U(x, q) = sum_j U_j(x) H_j(q)``."""
        u = self.coefficients(x)
        H = np.stack([hamiltonian(i, q, eps) for i in (1, 2, 3)], axis=-1)
        return np.sum(u * H, axis=-1)

    @property
    def is_zero(self) -> bool:
        return all(isinstance(c, Expr) and c.is_const(0.0) for c in self)


@dataclass(frozen=True)
class LieIntegralSpec:
    """Case tag and integration constants ``(minus, plus)``.

    The constants are ``(C-, C+)`` for Case I, ``(B-, B+)`` for Case II and
    ``(K-, K+)`` for Case III.  ``ratio`` is ``minus / plus``.
    """

    case: str
    minus: float = 1.0
    plus: float = 1.0

    def __post_init__(self):
        case = str(self.case).upper()
        if case not in ("I", "II", "III"):
            raise InvariantError("lie_integral.case", f"unknown case {self.case!r}")
        object.__setattr__(self, "case", case)
        if self.plus == 0:
            raise InvariantError("lie_integral.plus!=0", "the denominator constant must be nonzero")

    @property
    def ratio(self) -> float:
        return self.minus / self.plus


def euler_system(coefficients: CkrCoefficients) -> LinearSystem:
    return LinearSystem(coefficients.adjoint_matrix())


def solve_euler(
    coefficients: CkrCoefficients,
    initial: Sequence[float],
    x0: float,
    x1: float,
    cfg: IntegratorConfig | None = None,
) -> UpsilonTriple:
    """Integrate the Euler triplet from ``initial = (U1, U2, U3)`` at ``x0``."""
    path = integrate_linear(euler_system(coefficients), x0, initial, x1, cfg)
    return UpsilonTriple.from_path(path)


def euler_residual(coefficients: CkrCoefficients, upsilon: UpsilonTriple, x) -> np.ndarray:
    """Pointwise defect ``U' - A(x) U`` of the Euler triplet."""
    x = np.asarray(x, dtype=float)
    u = upsilon.coefficients(x)
    du = upsilon.derivatives(x)
    a = coefficients.evaluate(x)
    a1, a2, a3 = (a[..., k] for k in range(3))
    u1, u2, u3 = (u[..., k] for k in range(3))
    rhs = np.stack([a2 * u1 - a1 * u2, 2.0 * (a3 * u1 - a1 * u3), a3 * u2 - a2 * u3], axis=-1)
    return du - rhs


def _exp_integral(sigma: Expr, factor: float, x0: float, x1: float, grid):
    """``exp(factor * int_{x0}^x sigma)``; exact when sigma is constant."""
    if not sigma.depends_on_x():
        return func("exp", Const(factor * evaluate(sigma, 0.0)) * (X - x0))
    F = antiderivative(sigma, x0, x1, grid)
    return SampledPath(F.x, np.exp(factor * F.values[:, 0]))


def closed_form_upsilon(
    spec: LieIntegralSpec,
    *,
    sigma=None,
    M=None,
    swanson: SwansonParams | None = None,
    x0: float = 0.0,
    x1: float = 1.0,
    grid=2001,
) -> UpsilonTriple:
    """Closed-form Lie integral with ``U2 = 0``.

    Case I needs ``sigma`` (gauge ``alpha = delta = 1``):
    ``U1 = C- exp(-2 int sigma)``, ``U3 = C+ exp(2 int sigma)``.
    Case II needs the mass ``M``: ``U1 = B- M``, ``U3 = B+/M``.
    Case III needs Swanson parameters with ``nu1 = nu2`` and ``nu3 = nu4``:
    ``U1 = K-/alpha1^2``, ``U3 = K+ alpha1^2``.

    Integrals of sigma are anchored at ``x0``; when sigma depends on x the
    exponentials are tabulated on ``grid`` over ``[x0, x1]``.
    """
    minus, plus = spec.minus, spec.plus
    if spec.case == "I":
        if sigma is None:
            raise InvariantError("lie_integral.sigma", "Case I needs sigma")
        sigma = as_expr(sigma)
        e_minus = _exp_integral(sigma, -2.0, x0, x1, grid)
        e_plus = _exp_integral(sigma, 2.0, x0, x1, grid)
        if isinstance(e_minus, Expr):
            return UpsilonTriple(minus * e_minus, 0.0, plus * e_plus)
        return UpsilonTriple(
            SampledPath(e_minus.x, minus * e_minus.values),
            0.0,
            SampledPath(e_plus.x, plus * e_plus.values),
        )
    if spec.case == "II":
        if M is None:
            raise InvariantError("lie_integral.M", "Case II needs the mass profile M")
        M = as_expr(getattr(M, "M", M))
        return UpsilonTriple(minus * M, 0.0, plus / M)
    if swanson is None:
        raise InvariantError("lie_integral.swanson", "Case III needs Swanson parameters")
    if not swanson.k1_vanishes:
        raise InvariantError(
            "swanson.k1=0", "closed form requires nu1 == nu2 and nu3 == nu4 (k1 = 0)"
        )
    a1 = swanson.alpha1
    return UpsilonTriple(minus / a1**2, 0.0, plus * a1**2)


@dataclass(frozen=True)
class DriftReport:
    """How far a candidate Lie integral moves along a trajectory."""

    max_abs: float
    relative: float
    initial: float
    x: np.ndarray
    values: np.ndarray


def conservation_check(upsilon: UpsilonTriple, trajectory: Trajectory, eps: float = EPS_DOM) -> DriftReport:
    """Evaluate ``U`` along ``trajectory`` and report its drift.

    ``relative`` is ``max |U - U(x0)| / |U(x0)|`` (the absolute drift when
    ``U(x0) = 0``).
    """
    x = trajectory.x
    p = trajectory.p
    if upsilon.is_zero:
        values = np.zeros_like(x)
        return DriftReport(0.0, 0.0, 0.0, x, values)
    bad = np.abs(p[:, 0]) < eps
    if np.any(bad):
        raise ChartDomainError(
            f"trajectory reaches the p1 = 0 axis at x={float(x[np.flatnonzero(bad)[0]])!r}"
        )
    values = upsilon(x, p, eps)
    initial = float(values[0])
    max_abs = float(np.max(np.abs(values - initial)))
    relative = max_abs / abs(initial) if initial != 0.0 else max_abs
    return DriftReport(max_abs, relative, initial, x, values)


# -- consistency conditions -------------------------------------------------------

@dataclass(frozen=True)
class SigmaResult:
    sigma: SampledPath
    residual: SampledPath
    converged: bool
    iterations: int
    update: float


def sigma_constraint(
    V,
    m: float,
    E: float,
    C0: float | None = None,
    x0: float = 0.0,
    x1: float = 1.0,
    grid=2001,
    sigma0: float = 0.0,
    branch: str = "exact",
    damping: float = 0.5,
    max_iter: int = 200,
    tol: float = 1e-10,
) -> SigmaResult:
    """Solve the Case I gauge condition for sigma by damped Picard iteration.

    ``branch="exact"``::

        sigma' - 2m(V - E) + sigma^2 = C0 exp(-4 int sigma)

    ``branch="small"`` (linearized exponential, ``C0`` defaults to ``2mE``)::

        sigma' - 2mV + sigma^2 = -4 C0 int sigma

    Each sweep integrates the right-hand side of the previous iterate from
    ``sigma(x0) = sigma0`` and blends ``damping`` of the new iterate into the
    old one.  Iteration stops when the sup-norm update is at most ``tol``.
    The residual of the chosen equation is evaluated with a spline
    derivative of the final iterate.  Non-convergence is reported through
    ``converged=False`` rather than raised.
    """
    if branch not in ("exact", "small"):
        raise InvariantError("sigma.branch", f"unknown branch {branch!r}")
    V = as_expr(V)
    if C0 is None:
        C0 = 2.0 * m * E
    xs = _grid(x0, x1, grid)
    Vx = np.broadcast_to(evaluate(V, xs), xs.shape)

    def rhs(s):
        S = antiderivative(SampledPath(xs, s), x0, x1).values[:, 0]
        if branch == "exact":
            return 2.0 * m * (Vx - E) - s * s + C0 * np.exp(-4.0 * S)
        return 2.0 * m * Vx - s * s - 4.0 * C0 * S

    sigma = np.full(xs.shape, float(sigma0))
    update = math.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            new = sigma0 + antiderivative(SampledPath(xs, rhs(sigma)), x0, x1).values[:, 0]
            blended = (1.0 - damping) * sigma + damping * new
        if not np.all(np.isfinite(blended)):
            break
        update = float(np.max(np.abs(blended - sigma)))
        sigma = blended
        if update <= tol:
            converged = True
            break
    path = SampledPath(xs, sigma)
    with np.errstate(over="ignore", invalid="ignore"):
        residual = path.derivative(xs) - rhs(sigma)
    return SigmaResult(path, SampledPath(xs, residual), converged, it, update)


def mass_constraint(
    V,
    E: float,
    B0: float,
    a: float,
    M0: float | None = None,
    x0: float = 0.0,
    x1: float = 1.0,
    sign: int = 1,
    cfg: IntegratorConfig | None = None,
    grid=1001,
) -> SampledPath:
    """Mass profile compatible with the Case II closed-form Lie integral.

    With ordering ``b = -1``, ``c = -a`` the constraint reads
    ``B0 M = E - V - a^2 M'^2/M^3``.  For ``a = 0`` this is algebraic,
    ``M = (E - V)/B0``, tabulated on ``grid``.  Otherwise it is integrated
    as ``M' = sign * sqrt((E - V - B0 M) M^3) / |a|`` from ``M(x0) = M0``.

    Raises :class:`NumericalError` when the square-root argument turns
    negative (the branch is exhausted) and :class:`InvariantError` for
    ``B0 = 0``.
    """
    if B0 == 0:
        raise InvariantError("mass.B0!=0", "B0 must be nonzero")
    V = as_expr(V)
    if a == 0:
        xs = _grid(x0, x1, grid)
        M = (E - np.broadcast_to(evaluate(V, xs), xs.shape)) / B0
        return SampledPath(xs, M)
    if M0 is None:
        raise InvariantError("mass.M0", "the differential branch needs M(x0)")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    cfg = cfg or IntegratorConfig()
    scale = abs(a)

    def coeffs(x):
        x = np.asarray(x, dtype=float)
        return (x, np.broadcast_to(evaluate(V, x), x.shape))

    def rhs(c, y):
        x, Vx = c
        M = y[0]
        radicand = (E - Vx - B0 * M) * M**3
        if radicand < 0:
            size = abs(E) + abs(Vx) + abs(B0 * M)
            if radicand < -1e-12 * size * max(1.0, abs(M) ** 3):
                raise NumericalError("square-root domain exhausted on the mass branch", float(x))
            radicand = 0.0
        return np.array([sign * math.sqrt(radicand) / scale])

    xs, ys, status, x_stop = integrate(VectorField(coeffs, rhs), x0, [M0], x1, cfg)
    return SampledPath(xs, ys, status, x_stop)


def swanson_residual(nu_tilde: float, alpha1, k2, grid, K0: float = 1.0) -> SampledPath:
    """``k2' - 2 nu~ K0 alpha1'/alpha1^3`` on ``grid``."""
    alpha1, k2 = as_expr(alpha1), as_expr(k2)
    xs = np.atleast_1d(np.asarray(grid, dtype=float))
    expr = differentiate(k2) - 2.0 * nu_tilde * K0 * differentiate(alpha1) / alpha1**3
    return SampledPath(xs, np.broadcast_to(evaluate(expr, xs), xs.shape))


def swanson_condition(params: SwansonParams, E: float | None = None, grid=None, K0: float = 1.0) -> SampledPath:
    """Energy-free Swanson consistency condition on ``grid``.

    ``E`` does not enter the differential form; it is accepted so callers
    can pass a full problem, and :func:`swanson_energy_residual` gives the
    algebraic form ``E - k2 - nu~ K0/alpha1^2``.  Requires ``k1 = 0``.
    """
    if not params.k1_vanishes:
        raise InvariantError(
            "swanson.k1=0", "the condition needs nu1 == nu2 and nu3 == nu4 (k1 = 0)"
        )
    if grid is None:
        grid = np.linspace(0.0, 1.0, 101)
    nt, _, k2 = swanson_reduce(params)
    return swanson_residual(nt, params.alpha1, k2, grid, K0)


def swanson_energy_residual(params: SwansonParams, E: float, grid, K0: float = 1.0) -> SampledPath:
    nt, _, k2 = swanson_reduce(params)
    xs = np.atleast_1d(np.asarray(grid, dtype=float))
    expr = E - k2 - nt * K0 / params.alpha1**2
    return SampledPath(xs, np.broadcast_to(evaluate(expr, xs), xs.shape))
