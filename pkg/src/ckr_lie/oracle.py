"""Schrödinger-side reference for the CKR flows.

Each physical case has a linear eigen-equation ``psi'' = P psi' + Q psi``.
Its quantum momentum function ``qmf = -i psi'/psi``, pushed through the
gauge map ``p = (alpha qmf + i sigma)/delta``, must solve the matching CKR
system.  Integrating both sides independently and comparing them is the
master check of the coefficient formulas.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import singledispatch

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import InvariantError
from .expr import ZERO, Expr, differentiate, evaluate
from .model import ConstantMass, GaugeTriple, Swanson, VariableMass, swanson_reduce
from .ode import (
    BLOW_UP,
    COMPLETED,
    IntegratorConfig,
    LinearSystem,
    SampledPath,
    Trajectory,
    integrate_ckr,
    integrate_linear,
)

NODE_EPS = 1e-300


@dataclass(frozen=True)
class WavePath:
    """Samples ``(x_k, psi_k, psi'_k)`` of a complex wave function."""

    x: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    status: str = COMPLETED
    x_stop: float | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        psi = np.asarray(self.psi, dtype=complex)
        dpsi = np.asarray(self.dpsi, dtype=complex)
        if x.ndim != 1 or psi.shape != x.shape or dpsi.shape != x.shape:
            raise ValueError("x, psi and dpsi must be 1-D arrays of equal length")
        d = np.diff(x)
        if x.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise InvariantError("wavepath.monotone", "sample abscissae must be strictly monotone")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "dpsi", dpsi)

    @property
    def nodes(self) -> np.ndarray:
        """Mask of samples where ``psi`` vanishes and the QMF is undefined."""
        return np.abs(self.psi) <= NODE_EPS


# -- linear eigen-equations ---------------------------------------------------------

@singledispatch
def linear_form(case) -> tuple[Expr, Expr]:
    """``(P, Q)`` with ``psi'' = P psi' + Q psi`` for a case bundle."""
    raise TypeError(f"no linear eigen-equation for {type(case).__name__}")


@linear_form.register
def _(case: ConstantMass):
    pr = case.problem
    return ZERO, 2.0 * pr.m * (pr.V - pr.E)


@linear_form.register
def _(case: VariableMass):
    M = case.mass.M
    return differentiate(M) / M, M * (case.V_eff - case.E)


@linear_form.register
def _(case: Swanson):
    nt, k1, k2 = swanson_reduce(case.params)
    a1 = case.params.alpha1
    denom = nt * a1**2
    return (k1 - 2.0 * nt * a1 * differentiate(a1)) / denom, (k2 - case.E) / denom


def _system(case) -> LinearSystem:
    P, Q = linear_form(case)
    return LinearSystem(
        [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [Q, 0.0, P, 0.0],
            [0.0, Q, 0.0, P],
        ]
    )


def integrate_schrodinger(case, psi0: complex, dpsi0: complex, x0: float, x1: float, cfg: IntegratorConfig | None = None) -> WavePath:
    """Integrate the case's linear eigen-equation from complex initial data.

    Real and imaginary parts are carried as a four-component real system.
    """
    psi0, dpsi0 = complex(psi0), complex(dpsi0)
    y0 = [psi0.real, psi0.imag, dpsi0.real, dpsi0.imag]
    path = integrate_linear(_system(case), x0, y0, x1, cfg)
    v = path.values
    return WavePath(path.x, v[:, 0] + 1j * v[:, 1], v[:, 2] + 1j * v[:, 3], path.status, path.x_stop)


def _gauge_values(gauge: GaugeTriple, x):
    return tuple(
        np.broadcast_to(evaluate(e, x), np.shape(x)).astype(float)
        for e in (gauge.alpha, gauge.delta, gauge.sigma)
    )


def qmf(w: WavePath, gauge: GaugeTriple | None = None, blowup: float = 1e8) -> Trajectory:
    """Map a wave path to CKR variables through ``p = (alpha qmf + i sigma)/delta``.

    The trajectory stops before the first sample where ``psi`` vanishes or
    ``|p|`` exceeds ``blowup``; that sample's abscissa is reported as
    ``x_stop`` with status ``"blow-up"``.
    """
    gauge = gauge or GaugeTriple()
    alpha, delta, sigma = _gauge_values(gauge, w.x)
    with np.errstate(divide="ignore", invalid="ignore"):
        P = -1j * w.dpsi / w.psi
        p = (alpha * P + 1j * sigma) / delta
    bad = w.nodes | ~np.isfinite(p) | (np.abs(p) > blowup)
    status, x_stop = w.status, w.x_stop
    n = w.x.size
    if np.any(bad):
        n = int(np.flatnonzero(bad)[0])
        status, x_stop = BLOW_UP, float(w.x[n])
    p = p[:n]
    return Trajectory(w.x[:n], np.stack([p.real, p.imag], axis=-1), status, x_stop)


def wave_from_qmf(t: Trajectory, gauge: GaugeTriple | None = None, psi0: complex = 1.0) -> WavePath:
    """Rebuild ``psi = psi0 exp(i int qmf)`` from a CKR trajectory.

    The QMF is recovered as ``(delta p - i sigma)/alpha`` and the exponent
    is accumulated with cumulative Simpson weights on the trajectory nodes.
    """
    gauge = gauge or GaugeTriple()
    alpha, delta, sigma = _gauge_values(gauge, t.x)
    p = t.p[:, 0] + 1j * t.p[:, 1]
    P = (delta * p - 1j * sigma) / alpha
    phase = np.zeros(t.x.shape, dtype=complex)
    if t.x.size >= 3:
        f = 1j * P  # cumulative_simpson drops imaginary parts, so split them
        phase[1:] = cumulative_simpson(f.real, x=t.x) + 1j * cumulative_simpson(f.imag, x=t.x)
    elif t.x.size == 2:
        phase[1] = 0.5 * (t.x[1] - t.x[0]) * 1j * (P[0] + P[1])
    psi = complex(psi0) * np.exp(phase)
    return WavePath(t.x, psi, 1j * P * psi, t.status, t.x_stop)


def schrodinger_residual(w: WavePath, case) -> SampledPath:
    """Per-sample defect of the stored data against the linear equation.

    ``psi'`` and ``psi''`` are estimated by spline differentiation of the
    stored ``psi`` and ``psi'``; the defect is
    ``max(|d psi - psi'|, |d psi' - (P psi' + Q psi)|)``.
    """
    P, Q = linear_form(case)
    x = w.x
    Pv = np.broadcast_to(evaluate(P, x), x.shape)
    Qv = np.broadcast_to(evaluate(Q, x), x.shape)
    data = SampledPath(x, np.stack([w.psi, w.dpsi], axis=-1))
    d = data.derivative(x)
    r1 = np.abs(d[:, 0] - w.dpsi)
    r2 = np.abs(d[:, 1] - (Pv * w.dpsi + Qv * w.psi))
    return SampledPath(x, np.maximum(r1, r2))


@dataclass(frozen=True)
class Comparison:
    """Paired oracle and CKR trajectories on common nodes."""

    x: np.ndarray
    oracle: np.ndarray
    ckr: np.ndarray
    distance: np.ndarray
    oracle_status: str
    ckr_status: str
    truncated: bool = False

    @property
    def sup(self) -> float:
        return float(np.max(self.distance)) if self.distance.size else 0.0


def cross_validate(
    case,
    psi0: complex,
    dpsi0: complex,
    x0: float,
    x1: float,
    cfg: IntegratorConfig | None = None,
    pole_guard: float | None = None,
) -> Comparison:
    """Integrate both sides with the same fixed-step configuration and compare.

    The comparison covers the common prefix of nodes, so it stops at the
    first wave-function node or CKR blow-up.  Near a moving pole the
    Riccati flow amplifies step errors like ``|p|^2``, so the prefix is
    also cut before the first sample where either side has
    ``|p| > pole_guard`` (default ``0.01 / h``); ``truncated`` records it.
    """
    cfg = cfg or IntegratorConfig()
    if cfg.method != "rk4":
        raise InvariantError("oracle.method", "cross-validation pairs samples on the fixed-step grid")
    if pole_guard is None:
        pole_guard = 0.01 / cfg.h
    w = integrate_schrodinger(case, psi0, dpsi0, x0, x1, cfg)
    t_oracle = qmf(w, case.gauge, cfg.blowup)
    if t_oracle.x.size == 0:
        raise InvariantError("oracle.psi(x0)!=0", "psi vanishes at the initial point")
    t_ckr = integrate_ckr(case.coefficients(), x0, t_oracle.p[0], x1, cfg)
    n = min(t_oracle.x.size, t_ckr.x.size)
    a, b = t_oracle.p[:n], t_ckr.p[:n]
    big = (np.linalg.norm(a, axis=-1) > pole_guard) | (np.linalg.norm(b, axis=-1) > pole_guard)
    truncated = bool(np.any(big))
    if truncated:
        n = max(1, int(np.flatnonzero(big)[0]))
        a, b = a[:n], b[:n]
    return Comparison(
        t_oracle.x[:n],
        a,
        b,
        np.linalg.norm(a - b, axis=-1),
        t_oracle.status,
        t_ckr.status,
        truncated,
    )
