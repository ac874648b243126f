import numpy as np
import pytest

from ckr_lie.expr import parse
from ckr_lie.model import (
    CkrCoefficients,
    ConstantMass,
    GaugeTriple,
    MassOrdering,
    MassProfile,
    ProblemSpec,
    Swanson,
    SwansonParams,
    VariableMass,
)
from ckr_lie.ode import IntegratorConfig
from ckr_lie.symmetry import (
    SymmetryCoefficients,
    autonomized,
    case2_lambda2_integral_form,
    case2_quadrature_lambdas,
    identity_symmetry,
    lambda_ode_residual,
    quadrature_lambdas,
    solve_lambda,
    symmetry_residual,
)

PHASE = np.array([[1.0, 0.5], [2.0, -1.0]])


def extended_grid(x0=0.0, x1=1.0, n=50, phase=PHASE):
    xs = np.linspace(x0, x1, n)
    return np.concatenate(
        [np.repeat(xs, len(phase))[:, None], np.tile(phase, (n, 1))], axis=-1
    )


CASES = {
    "I": ConstantMass(
        ProblemSpec(0.8, parse("x^2/2 + sin(x)"), 0.4),
        GaugeTriple(parse("1 + x^2/4"), parse("2 + sin(x)/2"), parse("cos(x)/3")),
    ),
    "II": VariableMass(parse("x^2"), 1.3, MassProfile(parse("1 + x^2")), MassOrdering(-0.5, -0.25, -0.25)),
    "III": Swanson(SwansonParams((1.0, -0.5, -0.5, 0.2, 0.2), parse("exp(x/2)"), parse("x")), 0.5),
}


@pytest.mark.parametrize(
    "coeffs, q, expected",
    [
        ((0, 0, 0), (0.3, 1.0, 2.0), (1.0, 0.0, 0.0)),
        ((1, 0, 1), (0.0, 0.0, 0.0), (1.0, 0.0, 1.0)),
        ((parse("1 - x^2"), 0, 1), (1.0, 0.0, 1.0), (1.0, 0.0, 1.0)),
    ],
)
def test_autonomized(coeffs, q, expected):
    assert autonomized(CkrCoefficients(*coeffs), q) == pytest.approx(expected)


def test_zero_symmetry(oscillator_coefficients):
    sym = solve_lambda(oscillator_coefficients, 0.0, 1.0, A=0.0)
    assert np.all(sym.lambdas.values == 0.0)
    q = extended_grid()
    assert np.all(symmetry_residual(oscillator_coefficients, sym, q) == 0.0)


def test_multiplier_is_minus_lambda0_prime():
    sym = SymmetryCoefficients(parse("3*exp(x)"), (0, 0, 0))
    xs = np.linspace(0, 1, 5)
    assert np.array_equal(sym.multiplier(xs), -3 * np.exp(xs))


@pytest.mark.parametrize("label", sorted(CASES))
def test_identity_symmetry_exact(label):
    c = CASES[label].coefficients()
    q = extended_grid()
    assert np.max(np.abs(symmetry_residual(c, identity_symmetry(c), q))) <= 1e-12


@pytest.mark.parametrize("label", sorted(CASES))
def test_identity_symmetry_sampled(label):
    """Starting the integrator at lambda_j = a_j(x0) with lambda0 = 1 reproduces X~."""
    c = CASES[label].coefficients()
    sym = solve_lambda(c, 0.0, 1.0, initial=c.evaluate(0.0), lambda0=parse("1"))
    xs = sym.x
    assert np.max(np.abs(sym.lambdas.values - c.evaluate(xs))) <= 1e-10
    q = extended_grid()
    assert np.max(np.abs(symmetry_residual(c, sym, q))) <= 1e-8


def test_oscillator_symmetry_residual(oscillator_coefficients):
    sym = solve_lambda(oscillator_coefficients, 0.0, 1.0, A=1.0)
    q = extended_grid()
    assert np.max(np.abs(symmetry_residual(oscillator_coefficients, sym, q))) <= 1e-6


@pytest.mark.parametrize("label", sorted(CASES))
@pytest.mark.parametrize("initial", [(0, 0, 0), (1, -2, 0.5)])
def test_solved_symmetries(label, initial):
    c = CASES[label].coefficients()
    sym = solve_lambda(c, 0.0, 1.0, A=0.7, initial=initial)
    q = extended_grid(phase=np.array([[1.0, 0.5], [-0.5, 2.0], [3.0, 0.0]]))
    assert np.max(np.abs(symmetry_residual(c, sym, q))) <= 1e-6


def test_raw_ode_residual_at_midpoints(oscillator_coefficients):
    cfg = IntegratorConfig()
    sym = solve_lambda(oscillator_coefficients, 0.0, 1.0, cfg=cfg)
    xs = sym.x
    mid = 0.5 * (xs[:-1] + xs[1:])
    assert np.max(np.abs(lambda_ode_residual(oscillator_coefficients, sym, mid))) <= 10 * cfg.tolerance


def test_linearity():
    c = CASES["II"].coefficients()
    s1 = solve_lambda(c, 0.0, 1.0, A=1.0, initial=(1, 0, 0))
    s2 = solve_lambda(c, 0.0, 1.0, lambda0=parse("2*exp(x) + x"), initial=(0, 1, -1))
    summed = SymmetryCoefficients(
        s1.lambda0 + s2.lambda0,
        type(s1.lambdas)(s1.x, s1.lambdas.values + s2.lambdas.values),
    )
    xs = np.linspace(0.0, 1.0, 50)
    assert np.max(np.abs(lambda_ode_residual(c, summed, xs))) <= 1e-8


@pytest.mark.parametrize("label", sorted(CASES))
def test_generic_quadrature_matches_solver(label):
    c = CASES[label].coefficients()
    sym = solve_lambda(c, 0.0, 1.0, A=1.0, initial=(0.3, -0.2, 0.1))
    quad = quadrature_lambdas(c, sym).values
    lam = sym.lambdas.values
    assert np.max(np.abs(quad[:, 0] - lam[:, 0])) <= 1e-6
    assert np.max(np.abs(quad[:, 1] - lam[:, 2])) <= 1e-6


def test_case2_quadratures():
    case = CASES["II"]
    c = case.coefficients()
    sym = solve_lambda(c, 0.0, 1.0, A=1.0)
    quad = case2_quadrature_lambdas(case.mass.M, case.V_eff, case.E, sym).values
    lam = sym.lambdas.values
    assert np.max(np.abs(quad[:, 0] - lam[:, 0])) <= 1e-6
    assert np.max(np.abs(quad[:, 1] - lam[:, 2])) <= 1e-6
    l2 = case2_lambda2_integral_form(case.mass.M, case.V_eff, case.E, sym).values[:, 0]
    assert np.max(np.abs(l2 - lam[:, 1])) <= 1e-6


def test_non_symmetry_is_detected(oscillator_coefficients):
    sym = SymmetryCoefficients(parse("exp(x)"), (parse("x"), 0, 0))
    q = extended_grid()
    assert np.max(np.abs(symmetry_residual(oscillator_coefficients, sym, q))) > 1e-2
