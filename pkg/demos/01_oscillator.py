"""Harmonic oscillator, from potential to CKR flow and back.

The ground state psi = exp(-x^2/2) has quantum momentum function
qmf = -i psi'/psi = i x.  With the identity gauge, p = qmf, so the CKR
trajectory starting at the origin should be p(x) = (0, x).
"""
import numpy as np

from ckr_lie import (
    GaugeTriple,
    IntegratorConfig,
    ProblemSpec,
    build_case1,
    integrate_ckr,
    parse,
    wave_from_qmf,
)

problem = ProblemSpec(m=1.0, V=parse("x^2/2"), E=0.5)
coeffs = build_case1(problem, GaugeTriple())
print("coefficients:", *(str(a) for a in coeffs))

# %% integrate the planar Riccati system
traj = integrate_ckr(coeffs, 0.0, (0.0, 0.0), 2.0, IntegratorConfig(h=1e-3))
print(f"status={traj.status}, samples={traj.x.size}")
print(f"sup |p2 - x| = {np.max(np.abs(traj.p2 - traj.x)):.2e}")

# %% rebuild the wave function from the trajectory
wave = wave_from_qmf(traj, psi0=1.0)
err = np.max(np.abs(wave.psi - np.exp(-traj.x**2 / 2)))
print(f"sup |psi - exp(-x^2/2)| = {err:.2e}")

# %% an excited energy instead: psi now has a node and the flow hits a pole
excited = build_case1(ProblemSpec(1.0, parse("x^2/2"), 2.5))
t = integrate_ckr(excited, 0.0, (0.0, 0.0), 3.0)
print(f"E = 2.5: status={t.status} at x={t.x_stop:.4f}")
