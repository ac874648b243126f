"""The sl(2, R) Lie-Hamilton structure behind every CKR system.

Three vector fields chi_1, chi_2, chi_3 span the right-hand side for any
coefficients.  They close under the commutator, and each one is Hamiltonian
for omega = p1^-2 dp2 ^ dp1 away from the axis p1 = 0.
"""
import numpy as np

from ckr_lie import geometry as geo

q = geo.random_points(1000, seed=1)

# %% commutators, with exact Jacobians
for (i, j), combo in geo.COMMUTATOR_TABLE.items():
    expected = sum(c * geo.chi(k, q) for k, c in combo.items())
    err = np.max(np.abs(geo.commutator(i, j, q) - expected))
    print(f"[chi{i}, chi{j}] = {combo}: max error {err:.1e}")

# %% Hamiltonian functions: dH_i = omega(chi_i, .)
e1, e2 = np.eye(2)
for i in geo.INDICES:
    contr = np.stack([geo.contraction(i, q, e1), geo.contraction(i, q, e2)], axis=-1)
    fd = geo.gradient_fd(geo.hamiltonian_function(i), q)
    print(f"H{i}: finite-difference gradient vs contraction {np.max(np.abs(fd - contr)):.1e}")

# %% Poisson brackets close with the opposite sign
for (i, j), combo in geo.HAMILTONIAN_BRACKET_TABLE.items():
    expected = sum(c * geo.hamiltonian(k, q) for k, c in combo.items())
    err = np.max(np.abs(geo.bracket_lambda_exact(i, j, q) - expected))
    print(f"{{H{i}, H{j}}} = {combo}: max error {err:.1e}")

# %% the axis is outside the chart and is refused
try:
    geo.hamiltonian(1, (0.0, 1.0))
except geo.ChartDomainError as err:
    print("refused:", err)
