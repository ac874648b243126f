"""Lie-Hamiltonian toolkit for Cayley-Klein Riccati (CKR) systems.

Build CKR coefficients from one-dimensional quantum problems, integrate the
flow, check the sl(2,R) Lie-Hamilton structure, solve for Lie symmetries
and Lie integrals, and cross-check everything against the linear
Schrödinger equation.
"""
from .conserved import (
    LieIntegralSpec,
    UpsilonTriple,
    closed_form_upsilon,
    conservation_check,
    euler_residual,
    mass_constraint,
    sigma_constraint,
    solve_euler,
    swanson_condition,
    swanson_energy_residual,
    swanson_residual,
)
from .errors import (
    ChartDomainError,
    CkrLieError,
    ExprDomainError,
    InvariantError,
    NumericalError,
    ParseError,
)
from .expr import Expr, differentiate, evaluate, parse, to_string, wronskian
from .model import (
    CkrCoefficients,
    ConstantMass,
    GaugeTriple,
    MassOrdering,
    MassProfile,
    ProblemSpec,
    Swanson,
    SwansonParams,
    VariableMass,
    build_case1,
    build_case2,
    build_case3,
    effective_potential,
    swanson_reduce,
)
from .ode import (
    IntegratorConfig,
    LinearSystem,
    SampledPath,
    Trajectory,
    antiderivative,
    integrate_ckr,
    integrate_linear,
)
from .oracle import (
    WavePath,
    cross_validate,
    integrate_schrodinger,
    qmf,
    schrodinger_residual,
    wave_from_qmf,
)
from .symmetry import (
    SymmetryCoefficients,
    autonomized,
    identity_symmetry,
    lambda_ode_residual,
    quadrature_lambdas,
    solve_lambda,
    symmetry_residual,
)

__version__ = "0.1.0"
