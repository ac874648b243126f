"""sl(2,R) vector fields on the (p1, p2) plane and their Hamiltonian structure.

The three generators

    chi1 = d/dp2
    chi2 = p1 d/dp1 + p2 d/dp2
    chi3 = 2 p1 p2 d/dp1 + (p2^2 - p1^2) d/dp2

span the Vessiot-Guldberg algebra of every CKR system.  They are
Hamiltonian for ``omega = p1^-2 dp2 ^ dp1`` (equivalently for the bivector
``Lambda = p1^2 d/dp2 ^ d/dp1``) on the half-planes ``p1 != 0``, with
Hamiltonian functions

    H1 = -1/p1,   H2 = -p2/p1,   H3 = -(p1^2 + p2^2)/p1.

All functions accept a single point of shape ``(2,)`` or a batch of shape
``(..., 2)``; tangent vectors use the same layout.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ChartDomainError

EPS_DOM = 1e-9
INDICES = (1, 2, 3)


def _split(q):
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != 2:
        raise ValueError("phase points have two components (p1, p2)")
    return q[..., 0], q[..., 1]


def _guard(p1, eps):
    if np.any(np.abs(p1) < eps):
        raise ChartDomainError(
            f"point on or too close to the p1 = 0 axis (|p1| < {eps:g}); "
            "the symplectic chart excludes it"
        )


def _check_index(i):
    if i not in INDICES:
        raise ValueError(f"generator index must be 1, 2 or 3, got {i!r}")


def chi(i: int, q) -> np.ndarray:
    """Components of the generator ``chi_i`` at ``q``."""
    _check_index(i)
    p1, p2 = _split(q)
    if i == 1:
        return np.stack([np.zeros_like(p1), np.ones_like(p2)], axis=-1)
    if i == 2:
        return np.stack([p1, p2], axis=-1)
    return np.stack([2.0 * p1 * p2, p2 * p2 - p1 * p1], axis=-1)


def chi_jacobian(i: int, q) -> np.ndarray:
    """Exact Jacobian ``d chi_i^k / d p_l`` (rows k, columns l)."""
    _check_index(i)
    p1, p2 = _split(q)
    J = np.zeros(np.shape(p1) + (2, 2))
    if i == 2:
        J[..., 0, 0] = 1.0
        J[..., 1, 1] = 1.0
    elif i == 3:
        J[..., 0, 0] = 2.0 * p2
        J[..., 0, 1] = 2.0 * p1
        J[..., 1, 0] = -2.0 * p1
        J[..., 1, 1] = 2.0 * p2
    return J


def lie_bracket(X, JX, Y, JY) -> np.ndarray:
    """``[X, Y] = J_Y X - J_X Y`` from field values and Jacobians."""
    return np.einsum("...kl,...l->...k", JY, X) - np.einsum("...kl,...l->...k", JX, Y)


def commutator(i: int, j: int, q) -> np.ndarray:
    """Lie bracket ``[chi_i, chi_j]`` at ``q`` via exact Jacobians."""
    return lie_bracket(chi(i, q), chi_jacobian(i, q), chi(j, q), chi_jacobian(j, q))


def hamiltonian(i: int, q, eps: float = EPS_DOM):
    """Hamiltonian function ``H_i`` at ``q``."""
    _check_index(i)
    p1, p2 = _split(q)
    _guard(p1, eps)
    if i == 1:
        return -1.0 / p1
    if i == 2:
        return -p2 / p1
    return -(p1 * p1 + p2 * p2) / p1


def hamiltonian_gradient(i: int, q, eps: float = EPS_DOM) -> np.ndarray:
    """Closed-form ``(dH_i/dp1, dH_i/dp2)``."""
    _check_index(i)
    p1, p2 = _split(q)
    _guard(p1, eps)
    if i == 1:
        g = (1.0 / p1**2, np.zeros_like(p1))
    elif i == 2:
        g = (p2 / p1**2, -1.0 / p1)
    else:
        g = (p2**2 / p1**2 - 1.0, -2.0 * p2 / p1)
    return np.stack(np.broadcast_arrays(*g), axis=-1)


def hamiltonian_function(i: int, eps: float = EPS_DOM) -> Callable:
    """``H_i`` as a scalar field ``q -> H_i(q)``."""
    _check_index(i)
    return lambda q: hamiltonian(i, q, eps)


def symplectic(q, u, v, eps: float = EPS_DOM):
    """``omega(u, v) = p1^-2 (u2 v1 - u1 v2)`` at ``q``."""
    p1, _ = _split(q)
    _guard(p1, eps)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return (u[..., 1] * v[..., 0] - u[..., 0] * v[..., 1]) / p1**2


def contraction(i: int, q, v, eps: float = EPS_DOM):
    """``(iota_{chi_i} omega)(v) = omega(chi_i, v)``."""
    return symplectic(q, chi(i, q), v, eps)


def bracket_omega(i: int, j: int, q, eps: float = EPS_DOM):
    """``{H_i, H_j}_omega = omega(chi_i, chi_j)``, closed form."""
    return symplectic(q, chi(i, q), chi(j, q), eps)


def bivector(q, du, dv, eps: float = EPS_DOM):
    """``Lambda(du, dv) = p1^2 (du_2 dv_1 - dv_2 du_1)`` for covectors du, dv."""
    p1, _ = _split(q)
    _guard(p1, eps)
    du = np.asarray(du, dtype=float)
    dv = np.asarray(dv, dtype=float)
    return p1**2 * (du[..., 1] * dv[..., 0] - dv[..., 1] * du[..., 0])


def fd_step(q, rel_step: float = 1e-6) -> np.ndarray:
    """Per-component central-difference steps ``rel_step * (1 + |p_k|)``."""
    return rel_step * (1.0 + np.abs(np.asarray(q, dtype=float)))


def gradient_fd(f: Callable, q, rel_step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar field ``f``."""
    q = np.asarray(q, dtype=float)
    h = fd_step(q, rel_step)
    grads = []
    for k in range(2):
        e = np.zeros_like(q)
        e[..., k] = h[..., k]
        grads.append((f(q + e) - f(q - e)) / (2.0 * h[..., k]))
    return np.stack(grads, axis=-1)


def bracket_lambda(f: Callable, g: Callable, q, rel_step: float = 1e-6, eps: float = EPS_DOM):
    """``{f, g}_Lambda`` for arbitrary scalar fields, by finite differences.

    Steps follow :func:`fd_step`.  Use :func:`bracket_lambda_exact` for the
    Hamiltonian functions when closed-form gradients are wanted.
    """
    p1, _ = _split(q)
    _guard(p1, eps)
    return bivector(q, gradient_fd(f, q, rel_step), gradient_fd(g, q, rel_step), eps)


def bracket_lambda_exact(i: int, j: int, q, eps: float = EPS_DOM):
    """``{H_i, H_j}_Lambda`` with closed-form gradients."""
    return bivector(q, hamiltonian_gradient(i, q, eps), hamiltonian_gradient(j, q, eps), eps)


def bivector_field(i: int, q, eps: float = EPS_DOM) -> np.ndarray:
    """``-Lambda(dH_i)`` as a tangent vector; equals ``chi(i, q)``."""
    p1, _ = _split(q)
    dH = hamiltonian_gradient(i, q, eps)
    return np.stack([-(p1**2) * dH[..., 1], p1**2 * dH[..., 0]], axis=-1)


# Brackets of the generators and of the Hamiltonians, as linear combinations
# {k: coefficient}.  The Hamiltonian table is anti-isomorphic to the vector
# field table; each is checked on its own.
COMMUTATOR_TABLE = {
    (1, 2): {1: 1.0},
    (2, 3): {3: 1.0},
    (1, 3): {2: 2.0},
}
HAMILTONIAN_BRACKET_TABLE = {
    (1, 2): {1: -1.0},
    (2, 3): {3: -1.0},
    (1, 3): {2: -2.0},
}


def random_points(n: int, seed: int = 0, p1_range=(0.1, 10.0), p2_range=(-10.0, 10.0)) -> np.ndarray:
    """``n`` points with ``|p1|`` uniform in ``p1_range`` (random sign) and
    ``p2`` uniform in ``p2_range``."""
    rng = np.random.default_rng(seed)
    mag = rng.uniform(*p1_range, size=n)
    sign = rng.choice([-1.0, 1.0], size=n)
    p2 = rng.uniform(*p2_range, size=n)
    return np.stack([sign * mag, p2], axis=-1)
