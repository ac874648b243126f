"""CKR coefficient triples for the three physical cases.

Unit conventions
----------------
* Case I (constant mass): hbar = 1, mass ``m`` explicit.
* Cases II and III (position-dependent mass, Swanson): hbar = 2 m0 = 1, so
  a constant-mass Case I problem corresponds to ``m = 1/2``.

Each case reduces its quantum Hamilton-Jacobi equation for the quantum
momentum function to

    -i p' - a1 + i a2 p + a3 p^2 = 0,

whose real and imaginary parts form the planar CKR system integrated in
:mod:`ckr_lie.ode`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ExprDomainError, InvariantError
from .expr import Const, Expr, as_expr, differentiate, evaluate, wronskian


def _nonvanishing(e: Expr, grid, invariant: str, what: str):
    """Raise if ``e`` vanishes (or is undefined) on the sample grid."""
    if grid is None:
        return
    xs = np.atleast_1d(np.asarray(grid, dtype=float))
    try:
        values = evaluate(e, xs)
    except ExprDomainError as err:
        raise InvariantError(invariant, f"{what} is undefined at x={err.x!r} ({err.kind})") from err
    zero = values == 0.0
    # a sign change between neighbouring samples also means a zero in between
    crossing = np.zeros_like(zero)
    crossing[1:] = np.sign(values[1:]) * np.sign(values[:-1]) < 0
    bad = zero | crossing
    if np.any(bad):
        x_bad = float(xs[np.flatnonzero(bad)[0]])
        raise InvariantError(invariant, f"{what} vanishes near x={x_bad!r}")


def _real_finite(e: Expr, grid, invariant: str, what: str):
    if grid is None:
        return
    try:
        evaluate(e, np.atleast_1d(np.asarray(grid, dtype=float)))
    except ExprDomainError as err:
        raise InvariantError(invariant, f"{what} is undefined at x={err.x!r} ({err.kind})") from err


def _real_scalar(value, name: str) -> float:
    if isinstance(value, (complex, np.complexfloating)):
        raise InvariantError(f"{name}.real", f"{name} must be real, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class CkrCoefficients:
    """Coefficient triple ``(a1, a2, a3)`` of a CKR system."""

    a1: Expr
    a2: Expr
    a3: Expr

    def __post_init__(self):
        for name in ("a1", "a2", "a3"):
            object.__setattr__(self, name, as_expr(getattr(self, name)))

    def __iter__(self):
        return iter((self.a1, self.a2, self.a3))

    def evaluate(self, x) -> np.ndarray:
        """Values stacked along the last axis: shape ``x.shape + (3,)``."""
        return np.stack(np.broadcast_arrays(*(evaluate(a, x) for a in self)), axis=-1)

    def derivatives(self) -> "CkrCoefficients":
        return CkrCoefficients(*(differentiate(a) for a in self))

    def adjoint_matrix(self) -> list[list[Expr]]:
        """Matrix of ``u -> [sum a_j chi_j, .]`` on sl(2) coordinates.

        Both the symmetry system and the Euler triplet for Lie integrals are
        linear systems with this matrix.
        """
        a1, a2, a3 = self
        zero = Const(0.0)
        return [
            [a2, -a1, zero],
            [2.0 * a3, zero, -2.0 * a1],
            [zero, a3, -a2],
        ]

    def check(self, grid) -> "CkrCoefficients":
        for name, a in zip(("a1", "a2", "a3"), self):
            _real_finite(a, grid, f"coefficients.{name}", name)
        return self


@dataclass(frozen=True)
class ProblemSpec:
    """Constant-mass problem ``-(1/2m) psi'' + V psi = E psi`` (hbar = 1)."""

    m: float
    V: Expr
    E: float

    def __post_init__(self):
        object.__setattr__(self, "V", as_expr(self.V))
        object.__setattr__(self, "E", _real_scalar(self.E, "E"))
        m = _real_scalar(self.m, "m")
        if not m > 0:
            raise InvariantError("problem.m", f"mass must be positive, got {m!r}")
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class GaugeTriple:
    """Real gauge functions of ``p = (alpha * wp + i sigma) / delta``."""

    alpha: Expr = Const(1.0)
    delta: Expr = Const(1.0)
    sigma: Expr = Const(0.0)

    def __post_init__(self):
        for name in ("alpha", "delta", "sigma"):
            object.__setattr__(self, name, as_expr(getattr(self, name)))

    def check(self, grid) -> "GaugeTriple":
        _nonvanishing(self.alpha, grid, "gauge.alpha", "alpha")
        _nonvanishing(self.delta, grid, "gauge.delta", "delta")
        _real_finite(self.sigma, grid, "gauge.sigma", "sigma")
        return self


@dataclass(frozen=True)
class MassOrdering:
    """von Roos ordering parameters with ``a + b + c = -1``."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        total = float(self.a) + float(self.b) + float(self.c)
        # exact up to float rounding of the three inputs
        if abs(total + 1.0) > 1e-12:
            raise InvariantError(
                "ordering.a+b+c=-1", f"a + b + c = {total!r}, must equal -1"
            )

    @classmethod
    def from_a_b(cls, a: float, b: float) -> "MassOrdering":
        return cls(a, b, -1.0 - a - b)


@dataclass(frozen=True)
class MassProfile:
    """Dimensionless mass ``M(x)`` with ``m(x) = m0 M(x)`` and ``2 m0 = 1``."""

    M: Expr

    def __post_init__(self):
        object.__setattr__(self, "M", as_expr(self.M))

    def check(self, grid) -> "MassProfile":
        _nonvanishing(self.M, grid, "mass.M!=0", "mass M (singular point M=0)")
        return self


@dataclass(frozen=True)
class SwansonParams:
    """Swanson couplings ``nu = (nu0, ..., nu4)`` and ladder functions.

    The ladder operators are ``a = alpha1 d/dx + alpha2`` and
    ``a^+ = -alpha1 d/dx + alpha2 - alpha1'``.
    """

    nu: Sequence[float]
    alpha1: Expr
    alpha2: Expr

    def __post_init__(self):
        nu = tuple(_real_scalar(v, "nu") for v in self.nu)
        if len(nu) != 5:
            raise InvariantError("swanson.nu", f"need five couplings, got {len(nu)}")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "alpha1", as_expr(self.alpha1))
        object.__setattr__(self, "alpha2", as_expr(self.alpha2))
        if self.nu_tilde == 0.0:
            raise InvariantError("swanson.nu_tilde!=0", "nu0 - nu1 - nu2 must be nonzero")

    @property
    def nu_tilde(self) -> float:
        nu0, nu1, nu2, _, _ = self.nu
        return nu0 - nu1 - nu2

    @property
    def k1_vanishes(self) -> bool:
        """True when ``nu1 == nu2`` and ``nu3 == nu4``, which forces ``k1 = 0``."""
        _, nu1, nu2, nu3, nu4 = self.nu
        return nu1 == nu2 and nu3 == nu4

    def check(self, grid) -> "SwansonParams":
        _nonvanishing(self.alpha1, grid, "swanson.alpha1!=0", "alpha1")
        _real_finite(self.alpha2, grid, "swanson.alpha2", "alpha2")
        return self


# -- builders -----------------------------------------------------------------

def build_case1(problem: ProblemSpec, gauge: GaugeTriple | None = None, grid=None) -> CkrCoefficients:
    """Constant-mass coefficients.

    With ``f = 2m(V - E)`` and ``W(u, v) = u'v - uv'``::

        a1 = W(sigma, alpha)/(alpha delta) - (alpha/delta) f + sigma^2/(alpha delta)
        a2 = -(2 sigma/alpha + W(delta, alpha)/(delta alpha))
        a3 = delta/alpha

    ``a3`` reduces to ``1/alpha`` for ``delta = 1``.
    """
    gauge = gauge or GaugeTriple()
    gauge.check(grid)
    alpha, delta, sigma = gauge.alpha, gauge.delta, gauge.sigma
    f = 2.0 * problem.m * (problem.V - problem.E)
    ad = alpha * delta
    a1 = wronskian(sigma, alpha) / ad - (alpha / delta) * f + sigma**2 / ad
    a2 = -(2.0 * sigma / alpha + wronskian(delta, alpha) / (delta * alpha))
    a3 = delta / alpha
    return CkrCoefficients(a1, a2, a3).check(grid)


def effective_potential(mass: MassProfile, ordering: MassOrdering, V) -> Expr:
    """``V + ((b+1)/2) M''/M^2 - (1 + b - a c) M'^2/M^3``."""
    V = as_expr(V)
    M = mass.M
    dM = differentiate(M)
    d2M = differentiate(dM)
    c1 = (ordering.b + 1.0) / 2.0
    c2 = 1.0 + ordering.b - ordering.a * ordering.c
    out = V
    if c1 != 0.0:
        out = out + c1 * d2M / M**2
    if c2 != 0.0:
        out = out - c2 * dM**2 / M**3
    return out


def build_case2(V, E: float, mass: MassProfile, ordering: MassOrdering, grid=None) -> CkrCoefficients:
    """Position-dependent-mass coefficients ``(M (E - V_eff), M'/M, 1)``."""
    E = _real_scalar(E, "E")
    mass.check(grid)
    M = mass.M
    V_eff = effective_potential(mass, ordering, V)
    return CkrCoefficients(M * (E - V_eff), differentiate(M) / M, Const(1.0)).check(grid)


def swanson_reduce(params: SwansonParams) -> tuple[float, Expr, Expr]:
    """Reduce the Swanson Hamiltonian to ``-nu~ (alpha1^2 psi')' + k1 psi' + k2 psi``.

    Returns ``(nu_tilde, k1, k2)``.  The ``nu2`` term of ``k2`` carries
    ``alpha1 alpha1''``, which is what expanding ``(a^+)^2`` produces.
    """
    nu0, nu1, nu2, nu3, nu4 = params.nu
    a1, a2 = params.alpha1, params.alpha2
    da1 = differentiate(a1)
    d2a1 = differentiate(da1)
    da2 = differentiate(a2)
    k1 = (nu1 - nu2) * a1 * (2.0 * a2 - da1) + (nu3 - nu4) * a1
    k2 = (
        (nu0 + nu1 + nu2) * a2**2
        - (nu0 + 2.0 * nu2) * da1 * a2
        - (nu0 - nu1 + nu2) * a1 * da2
        + nu2 * (a1 * d2a1 + da1**2)
        + (nu3 + nu4) * a2
        - nu4 * da1
        + nu0 / 2.0
    )
    return params.nu_tilde, k1, k2


def build_case3(params: SwansonParams, E: float, grid=None) -> CkrCoefficients:
    """Swanson coefficients ``((E-k2)/(nu~ a1^2), (k1 - 2 nu~ a1 a1')/(nu~ a1^2), 1)``."""
    E = _real_scalar(E, "E")
    params.check(grid)
    nt, k1, k2 = swanson_reduce(params)
    a1 = params.alpha1
    denom = nt * a1**2
    c1 = (E - k2) / denom
    c2 = (k1 - 2.0 * nt * a1 * differentiate(a1)) / denom
    return CkrCoefficients(c1, c2, Const(1.0)).check(grid)


# -- case bundles ---------------------------------------------------------------

@dataclass(frozen=True)
class ConstantMass:
    """Case I: constant mass, optional gauge."""

    problem: ProblemSpec
    gauge: GaugeTriple = field(default_factory=GaugeTriple)

    label = "I"

    @property
    def E(self) -> float:
        return self.problem.E

    def coefficients(self, grid=None) -> CkrCoefficients:
        return build_case1(self.problem, self.gauge, grid)


@dataclass(frozen=True)
class VariableMass:
    """Case II: position-dependent effective mass (identity gauge)."""

    V: Expr
    E: float
    mass: MassProfile
    ordering: MassOrdering

    label = "II"

    def __post_init__(self):
        object.__setattr__(self, "V", as_expr(self.V))
        object.__setattr__(self, "E", _real_scalar(self.E, "E"))

    @property
    def gauge(self) -> GaugeTriple:
        return GaugeTriple()

    @property
    def V_eff(self) -> Expr:
        return effective_potential(self.mass, self.ordering, self.V)

    def coefficients(self, grid=None) -> CkrCoefficients:
        return build_case2(self.V, self.E, self.mass, self.ordering, grid)


@dataclass(frozen=True)
class Swanson:
    """Case III: non-Hermitian Swanson model (identity gauge)."""

    params: SwansonParams
    E: float

    label = "III"

    def __post_init__(self):
        object.__setattr__(self, "E", _real_scalar(self.E, "E"))

    @property
    def gauge(self) -> GaugeTriple:
        return GaugeTriple()

    def coefficients(self, grid=None) -> CkrCoefficients:
        return build_case3(self.params, self.E, grid)
