"""Lie symmetries of the autonomized CKR field.

A symmetry Y = lambda0 d/dx + sum lambda_j chi_j satisfies
[Y, X~] = lambda X~.  Its coefficients solve a linear system, which we
integrate and then check directly against the commutator.
"""
import numpy as np

from ckr_lie import (
    CkrCoefficients,
    identity_symmetry,
    parse,
    quadrature_lambdas,
    solve_lambda,
    symmetry_residual,
)

osc = CkrCoefficients(parse("1 - x^2"), 0.0, 1.0)
xs = np.linspace(0.0, 1.0, 50)
phase = np.array([[1.0, 0.5], [2.0, -1.0], [-0.3, 4.0]])
q = np.concatenate([np.repeat(xs, len(phase))[:, None], np.tile(phase, (xs.size, 1))], axis=-1)

# %% X~ is trivially a symmetry of itself
print("Y = X~:", np.max(np.abs(symmetry_residual(osc, identity_symmetry(osc), q))))

# %% lambda0 = A e^x with several choices of the free integration constants
for init in [(0, 0, 0), (1, 0, 0), (0, 1, -1)]:
    sym = solve_lambda(osc, 0.0, 1.0, A=1.0, initial=init)
    r = np.max(np.abs(symmetry_residual(osc, sym, q)))
    print(f"initial {init}: commutator residual {r:.1e}")

# %% lambda1 and lambda3 also follow from lambda2 by quadrature
quad = quadrature_lambdas(osc, sym).values
lam = sym.lambdas.values
print("quadrature vs ODE:", np.max(np.abs(quad[:, 0] - lam[:, 0])), np.max(np.abs(quad[:, 1] - lam[:, 2])))
