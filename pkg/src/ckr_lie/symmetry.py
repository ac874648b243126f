"""Lie symmetries ``Y = lambda0 d/dx + sum_j lambda_j chi_j`` of CKR systems.

``Y`` is a symmetry of the autonomized field ``X~ = d/dx + sum_j a_j chi_j``
when ``[Y, X~] = lambda X~``.  Expanding with the sl(2) commutation
relations gives ``lambda = -lambda0'`` and a linear system for
``(lambda1, lambda2, lambda3)``::

    lambda1' = lambda0 a1' + lambda1 a2 - lambda2 a1 + a0 a1
    lambda2' = lambda0 a2' + 2 (lambda1 a3 - lambda3 a1) + a0 a2
    lambda3' = lambda0 a3' + lambda2 a3 - lambda3 a2 + a0 a3

with ``a0 = lambda0'``.  :func:`solve_lambda` integrates this system;
:func:`symmetry_residual` checks the commutator condition directly from the
vector fields, independently of the system above.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import X, Const, Expr, as_expr, differentiate, evaluate, func
from .geometry import chi, chi_jacobian, lie_bracket
from .model import CkrCoefficients
from .ode import IntegratorConfig, LinearSystem, SampledPath, antiderivative, integrate_linear


@dataclass(frozen=True)
class SymmetryCoefficients:
    """Coefficients of a candidate symmetry operator.

    ``lambda0`` is an expression; ``lambdas`` is either a three-component
    :class:`SampledPath` or a tuple of three expressions.  Derivatives of
    sampled components come from a quintic spline through the samples.
    """

    lambda0: Expr
    lambdas: SampledPath | tuple

    def __post_init__(self):
        object.__setattr__(self, "lambda0", as_expr(self.lambda0))
        if not isinstance(self.lambdas, SampledPath):
            lam = tuple(as_expr(e) for e in self.lambdas)
            if len(lam) != 3:
                raise ValueError("need three coefficients lambda1..lambda3")
            object.__setattr__(self, "lambdas", lam)
        elif self.lambdas.n_components != 3:
            raise ValueError("sampled path must have three components")

    @property
    def a0(self) -> Expr:
        return differentiate(self.lambda0)

    def multiplier(self, x):
        """``lambda(x) = -a0(x)``."""
        return -evaluate(self.a0, x)

    @property
    def is_sampled(self) -> bool:
        return isinstance(self.lambdas, SampledPath)

    @property
    def x(self) -> np.ndarray | None:
        return self.lambdas.x if self.is_sampled else None

    def values(self, x) -> np.ndarray:
        """``(lambda0, lambda1, lambda2, lambda3)`` along the last axis."""
        x = np.asarray(x, dtype=float)
        l0 = evaluate(self.lambda0, x)
        if self.is_sampled:
            lam = self.lambdas.spline()(x)
        else:
            lam = np.stack(np.broadcast_arrays(*(evaluate(e, x) for e in self.lambdas)), axis=-1)
        return np.concatenate([np.asarray(l0)[..., None], lam], axis=-1)

    def derivatives(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d0 = evaluate(self.a0, x)
        if self.is_sampled:
            dlam = self.lambdas.derivative(x)
        else:
            dlam = np.stack(
                np.broadcast_arrays(*(evaluate(differentiate(e), x) for e in self.lambdas)),
                axis=-1,
            )
        return np.concatenate([np.asarray(d0)[..., None], dlam], axis=-1)


def exponential_lambda0(A: float = 1.0) -> Expr:
    """``lambda0 = A e^x``, the branch selected by ``lambda0 = a0``."""
    return Const(float(A)) * func("exp", X)


def autonomized(coefficients: CkrCoefficients, q) -> np.ndarray:
    """``X~(q) = (1, a2 p1 + 2 a3 p1 p2, a1 + a2 p2 + a3 (p2^2 - p1^2))``.

    ``q = (x, p1, p2)``, optionally batched along leading axes.
    """
    q = np.asarray(q, dtype=float)
    a = coefficients.evaluate(q[..., 0])
    field_ = sum(a[..., j, None] * chi(j + 1, q[..., 1:]) for j in range(3))
    return np.concatenate([np.ones(q.shape[:-1] + (1,)), field_], axis=-1)


def lambda_system(coefficients: CkrCoefficients, lambda0) -> LinearSystem:
    """Linear system for ``(lambda1, lambda2, lambda3)`` given ``lambda0``."""
    lambda0 = as_expr(lambda0)
    # forcing_j = lambda0 a_j' + a0 a_j = (lambda0 a_j)'
    forcing = [differentiate(lambda0 * a) for a in coefficients]
    return LinearSystem(coefficients.adjoint_matrix(), forcing)


def solve_lambda(
    coefficients: CkrCoefficients,
    x0: float,
    x1: float,
    A: float = 1.0,
    initial: Sequence[float] = (0.0, 0.0, 0.0),
    cfg: IntegratorConfig | None = None,
    lambda0=None,
) -> SymmetryCoefficients:
    """Integrate the symmetry coefficients on ``[x0, x1]``.

    ``lambda0`` defaults to ``A e^x``; any expression may be supplied
    instead (``a0`` is always its derivative).  ``initial`` holds
    ``(lambda1, lambda2, lambda3)`` at ``x0``; the integration constants are
    free, so any choice gives a valid symmetry.
    """
    lambda0 = exponential_lambda0(A) if lambda0 is None else as_expr(lambda0)
    path = integrate_linear(lambda_system(coefficients, lambda0), x0, initial, x1, cfg)
    return SymmetryCoefficients(lambda0, path)


def identity_symmetry(coefficients: CkrCoefficients) -> SymmetryCoefficients:
    """``Y = X~`` itself (``lambda0 = 1``, ``lambda_j = a_j``, multiplier 0)."""
    return SymmetryCoefficients(Const(1.0), tuple(coefficients))


def symmetry_residual(coefficients: CkrCoefficients, sym: SymmetryCoefficients, q) -> np.ndarray:
    """``[Y, X~](q) - lambda(x) X~(q)`` on extended points ``q = (x, p1, p2)``.

    The bracket is formed from the vector fields and their Jacobians on
    ``(x, p1, p2)`` space; it does not use the commutation table.
    """
    q = np.asarray(q, dtype=float)
    x, p = q[..., 0], q[..., 1:]
    batch = q.shape[:-1]

    a = coefficients.evaluate(x)
    da = coefficients.derivatives().evaluate(x)
    lam = sym.values(x)
    dlam = sym.derivatives(x)

    chis = [chi(i, p) for i in (1, 2, 3)]
    jacs = [chi_jacobian(i, p) for i in (1, 2, 3)]

    def extended(c0, dc0, c, dc):
        """Field ``c0 d/dx + sum c_j chi_j`` and its 3x3 Jacobian."""
        vec = np.concatenate([c0[..., None], sum(c[..., j, None] * chis[j] for j in range(3))], axis=-1)
        J = np.zeros(batch + (3, 3))
        J[..., 0, 0] = dc0
        J[..., 1:, 0] = sum(dc[..., j, None] * chis[j] for j in range(3))
        J[..., 1:, 1:] = sum(c[..., j, None, None] * jacs[j] for j in range(3))
        return vec, J

    Xt, JXt = extended(np.ones(batch), np.zeros(batch), a, da)
    Y, JY = extended(lam[..., 0], dlam[..., 0], lam[..., 1:], dlam[..., 1:])
    bracket = lie_bracket(Y, JY, Xt, JXt)
    multiplier = -dlam[..., 0]
    return bracket - multiplier[..., None] * Xt


def lambda_ode_residual(coefficients: CkrCoefficients, sym: SymmetryCoefficients, x) -> np.ndarray:
    """Pointwise defect of the (lambda1, lambda2, lambda3) system at ``x``."""
    x = np.asarray(x, dtype=float)
    a = coefficients.evaluate(x)
    da = coefficients.derivatives().evaluate(x)
    lam = sym.values(x)
    dlam = sym.derivatives(x)
    l0, l1, l2, l3 = (lam[..., k] for k in range(4))
    a0 = dlam[..., 0]
    a1, a2, a3 = (a[..., k] for k in range(3))
    rhs = np.stack(
        [
            l0 * da[..., 0] + l1 * a2 - l2 * a1 + a0 * a1,
            l0 * da[..., 1] + 2.0 * (l1 * a3 - l3 * a1) + a0 * a2,
            l0 * da[..., 2] + l2 * a3 - l3 * a2 + a0 * a3,
        ],
        axis=-1,
    )
    return dlam[..., 1:] - rhs


# -- quadrature cross-checks ------------------------------------------------------

def _on_nodes(e: Expr, xs):
    return np.broadcast_to(evaluate(e, xs), xs.shape)


def quadrature_lambdas(
    coefficients: CkrCoefficients, sym: SymmetryCoefficients, integrating_factor=None
) -> SampledPath:
    """Rebuild ``lambda1`` and ``lambda3`` from ``lambda2`` by quadrature.

    With ``g'/g = a2``::

        lambda1 = g [lambda1(x0)/g(x0) + int (1/g)((lambda0 a1)' - lambda2 a1)]
        lambda3 = (1/g) [g(x0) lambda3(x0) + int g ((lambda0 a3)' + lambda2 a3)]

    ``g`` defaults to ``exp(int_{x0}^x a2)``.  Integrals are anchored at the
    first node of the sampled symmetry.  Returns a two-component path
    ``(lambda1, lambda3)`` on the same nodes.
    """
    if not sym.is_sampled:
        raise ValueError("quadrature check needs a sampled lambda2")
    xs = sym.x
    x0 = xs[0]
    lam = sym.lambdas.values
    l2 = lam[:, 1]
    a1, a2, a3 = coefficients
    if integrating_factor is None:
        g = np.exp(antiderivative(SampledPath(xs, _on_nodes(a2, xs)), x0, xs[-1]).values[:, 0])
    else:
        g = _on_nodes(as_expr(integrating_factor), xs)
    d_l0a1 = _on_nodes(differentiate(sym.lambda0 * a1), xs)
    d_l0a3 = _on_nodes(differentiate(sym.lambda0 * a3), xs)
    a1v, a3v = _on_nodes(a1, xs), _on_nodes(a3, xs)

    I1 = antiderivative(SampledPath(xs, (d_l0a1 - l2 * a1v) / g), x0, xs[-1]).values[:, 0]
    I3 = antiderivative(SampledPath(xs, g * (d_l0a3 + l2 * a3v)), x0, xs[-1]).values[:, 0]
    lam1 = g * (lam[0, 0] / g[0] + I1)
    lam3 = (g[0] * lam[0, 2] + I3) / g
    return SampledPath(xs, np.stack([lam1, lam3], axis=-1))


def case2_quadrature_lambdas(M, V_eff, E: float, sym: SymmetryCoefficients) -> SampledPath:
    """Variable-mass closed quadratures for ``lambda1`` and ``lambda3``::

        lambda1 = M [C1 + int ((1/M) d/dxi (lambda0 M (E - V_eff)) - lambda2 (E - V_eff))]
        lambda3 = (1/M) [C3 + int M (a0 + lambda2)]

    ``a0 = lambda0'`` (``= A e^x`` on the exponential branch).  ``C1, C3``
    are fixed by the values at the first node.
    """
    M, V_eff = as_expr(M), as_expr(V_eff)
    if not sym.is_sampled:
        raise ValueError("quadrature check needs a sampled lambda2")
    xs = sym.x
    lam = sym.lambdas.values
    l2 = lam[:, 1]
    kinetic = E - V_eff
    Mv = _on_nodes(M, xs)
    integrand1 = _on_nodes(differentiate(sym.lambda0 * M * kinetic) / M, xs) - l2 * _on_nodes(kinetic, xs)
    integrand3 = Mv * (_on_nodes(sym.a0, xs) + l2)
    I1 = antiderivative(SampledPath(xs, integrand1), xs[0], xs[-1]).values[:, 0]
    I3 = antiderivative(SampledPath(xs, integrand3), xs[0], xs[-1]).values[:, 0]
    lam1 = Mv * (lam[0, 0] / Mv[0] + I1)
    lam3 = (Mv[0] * lam[0, 2] + I3) / Mv
    return SampledPath(xs, np.stack([lam1, lam3], axis=-1))


def case2_lambda2_integral_form(M, V_eff, E: float, sym: SymmetryCoefficients) -> SampledPath:
    """Right-hand side of the integral equation for ``lambda2`` (variable mass).

    ``lambda2 = lambda0 M'/M + C + int [2 M I1 - 2 (E - V_eff) I3]`` where
    ``I1 = lambda1/M`` and ``I3 = M lambda3`` come from
    :func:`case2_quadrature_lambdas` and ``C`` matches the first node.
    Evaluated with the sampled ``lambda2`` inserted, it must reproduce it.
    """
    M, V_eff = as_expr(M), as_expr(V_eff)
    xs = sym.x
    quad = case2_quadrature_lambdas(M, V_eff, E, sym).values
    Mv = _on_nodes(M, xs)
    I1 = quad[:, 0] / Mv
    I3 = quad[:, 1] * Mv
    inner = 2.0 * Mv * I1 - 2.0 * _on_nodes(E - V_eff, xs) * I3
    outer = antiderivative(SampledPath(xs, inner), xs[0], xs[-1]).values[:, 0]
    lead = _on_nodes(sym.lambda0 * differentiate(M) / M, xs)
    C = sym.lambdas.values[0, 1] - lead[0]
    return SampledPath(xs, lead + C + outer)
