import numpy as np
import pytest

from ckr_lie.errors import ChartDomainError, InvariantError, NumericalError
from ckr_lie.expr import evaluate, parse
from ckr_lie.geometry import hamiltonian
from ckr_lie.model import (
    CkrCoefficients,
    MassOrdering,
    MassProfile,
    SwansonParams,
    VariableMass,
    build_case3,
)
from ckr_lie.ode import IntegratorConfig, integrate_ckr
from ckr_lie.conserved import (
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

Q = np.array([[1.0, 0.0], [0.5, 2.0], [-2.0, 1.0]])
XS = np.linspace(0.0, 1.0, 11)


def manufactured_swanson(E):
    """alpha1 = e^{x/2} with alpha2 chosen so that k2 = E - nu~/alpha1^2 (nu~ = 2)."""
    alpha2 = parse(f"-(1 - 2*{E!r})*exp(-x/2) - (4/3)*exp(-3*x/2) - exp(x/2)/2")
    return SwansonParams((1.0, -0.5, -0.5, 0.0, 0.0), parse("exp(x/2)"), alpha2)


def test_zero_upsilon_has_no_drift():
    t = integrate_ckr(CkrCoefficients(1, 0.3, 1), 0.0, (1.0, 0.0), 1.0)
    rep = conservation_check(UpsilonTriple(0, 0, 0), t)
    assert rep.max_abs == 0.0 and rep.relative == 0.0


def test_solve_euler_constant_cases():
    u = solve_euler(CkrCoefficients(0, 0, 0), (1.0, 2.0, 3.0), 0.0, 1.0)
    assert np.all(u.coefficients(XS) == [1.0, 2.0, 3.0])
    C0, Cp = 0.7, 2.0
    u = solve_euler(CkrCoefficients(C0, 0, 1), (C0 * Cp, 0.0, Cp), 0.0, 1.0)
    assert np.max(np.abs(u.coefficients(XS) - [C0 * Cp, 0.0, Cp])) <= 1e-14


def test_solve_euler_mass_branch():
    M = parse("1 + x^2")
    E, Bm, Bp = 1.0, 0.5, 2.0
    # a1 = B0 M^2 with B0 = Bm/Bp makes the U2 = 0 branch consistent
    c = CkrCoefficients((Bm / Bp) * M**2, parse("2*x/(1 + x^2)"), 1.0)
    u = solve_euler(c, (Bm * 1.0, 0.0, Bp / 1.0), 0.0, 1.0)
    m = 1 + XS**2
    assert np.max(np.abs(u.coefficients(XS) - np.stack([Bm * m, 0 * m, Bp / m], axis=-1))) <= 1e-8


def test_closed_form_values():
    u = closed_form_upsilon(LieIntegralSpec("I", 1.0, 1.0), sigma=parse("0"))
    p1, p2 = Q[:, 0], Q[:, 1]
    assert u(0.3, Q) == pytest.approx(-1 / p1 - (p1**2 + p2**2) / p1)
    u = closed_form_upsilon(LieIntegralSpec("II", 1.0, 1.0), M=parse("exp(x)"))
    x = 0.4
    assert u(x, Q) == pytest.approx(-np.exp(x) / p1 - np.exp(-x) * (p1**2 + p2**2) / p1)
    sw = SwansonParams((1, 0, 0, 0, 0), parse("1"), parse("x"))
    u = closed_form_upsilon(LieIntegralSpec("III", 0.5, 3.0), swanson=sw)
    assert u(x, Q) == pytest.approx(-0.5 / p1 - 3.0 * (p1**2 + p2**2) / p1)


def test_closed_form_sigma_integral():
    sigma = parse("cos(x)")
    u = closed_form_upsilon(LieIntegralSpec("I", 2.0, 0.5), sigma=sigma, x0=0.0, x1=1.0)
    xs = u.u1.x[::250]  # stored nodes; between nodes the contract is linear interpolation
    c = u.coefficients(xs)
    assert c[:, 0] == pytest.approx(2.0 * np.exp(-2 * np.sin(xs)), rel=1e-8)
    assert c[:, 2] == pytest.approx(0.5 * np.exp(2 * np.sin(xs)), rel=1e-8)


def test_lie_integral_spec():
    assert LieIntegralSpec("ii", 3.0, 2.0).ratio == 1.5
    with pytest.raises(InvariantError):
        LieIntegralSpec("IV")
    with pytest.raises(InvariantError):
        LieIntegralSpec("I", 1.0, 0.0)


def test_case1_fixed_point_conservation():
    c = CkrCoefficients(1, 0, 1)
    u = closed_form_upsilon(LieIntegralSpec("I", 1.0, 1.0), sigma=parse("0"))
    rep = conservation_check(u, integrate_ckr(c, 0.0, (1.0, 0.0), 1.0))
    assert rep.initial == -2.0
    assert rep.relative <= 1e-8


def test_case1_moving_point_conservation():
    c = CkrCoefficients(1, 0, 1)
    u = closed_form_upsilon(LieIntegralSpec("I", 1.0, 1.0), sigma=parse("0"))
    rep = conservation_check(u, integrate_ckr(c, 0.0, (0.5, 0.3), 1.0))
    assert rep.relative <= 1e-8
    assert np.ptp(integrate_ckr(c, 0.0, (0.5, 0.3), 1.0).p2) > 0.1


def test_case2_conservation():
    case = VariableMass(parse("2 - exp(x)"), 2.0, MassProfile(parse("exp(x)")), MassOrdering(0.0, -1.0, 0.0))
    c = case.coefficients()
    assert c.evaluate(0.5) == pytest.approx([np.exp(1.0), 1.0, 1.0])
    u = closed_form_upsilon(LieIntegralSpec("II", 1.0, 1.0), M=case.mass)
    rep = conservation_check(u, integrate_ckr(c, 0.0, (1.0, 0.0), 1.0))
    assert rep.initial == -2.0
    assert rep.relative <= 1e-8


def test_case3_conservation():
    sw = SwansonParams((1, 0, 0, 0, 0), parse("1"), parse("x"))
    c = build_case3(sw, 1.5)  # a = (2 - x^2, 0, 1)
    u = solve_euler(c, (1.0, 0.0, 1.0), 0.0, 1.0)
    rep = conservation_check(u, integrate_ckr(c, 0.0, (1.0, 0.0), 1.0))
    assert rep.initial == -2.0
    assert rep.relative <= 1e-8


def test_perturbation_is_detected():
    u = closed_form_upsilon(LieIntegralSpec("I", 1.0, 1.0), sigma=parse("0"))
    for start in [(1.0, 0.0), (0.5, 0.3)]:
        base = conservation_check(u, integrate_ckr(CkrCoefficients(1, 0, 1), 0.0, start, 1.0))
        bent = conservation_check(u, integrate_ckr(CkrCoefficients(1.01, 0, 1), 0.0, start, 1.0))
        assert bent.relative >= 10 * base.relative
        assert bent.relative > 1e-6


@pytest.mark.parametrize(
    "coeffs, initial, start",
    [
        ((parse("1 - x^2"), 0.0, 1.0), (0.3, -0.7, 1.1), (1.0, 0.5)),
        ((parse("exp(2*x)"), 1.0, 1.0), (1.0, 0.2, 0.4), (2.0, -1.0)),
        ((parse("cos(x)"), parse("x/3"), parse("1 + x^2/4")), (-1.0, 0.5, 2.0), (0.7, 0.0)),
    ],
)
def test_euler_solutions_are_conserved(coeffs, initial, start):
    c = CkrCoefficients(*coeffs)
    cfg = IntegratorConfig()
    u = solve_euler(c, initial, 0.0, 1.0, cfg)
    t = integrate_ckr(c, 0.0, start, 1.0, cfg)
    rep = conservation_check(u, t)
    assert rep.relative <= 100 * cfg.tolerance


def test_axis_violation_is_reported():
    u = closed_form_upsilon(LieIntegralSpec("I"), sigma=parse("0"))
    t = integrate_ckr(CkrCoefficients(1, 0, 1), 0.0, (0.0, 0.0), 1.0)
    with pytest.raises(ChartDomainError):
        conservation_check(u, t)


def test_euler_residual_of_closed_form():
    M = parse("exp(x)")
    c = CkrCoefficients(M**2, 1.0, 1.0)
    u = closed_form_upsilon(LieIntegralSpec("II", 1.0, 1.0), M=M)
    assert np.max(np.abs(euler_residual(c, u, XS))) <= 1e-12


# -- sigma ---------------------------------------------------------------------------

def test_sigma_exact_fixed_point():
    m, E, C0 = 0.5, 1.0, 0.4
    res = sigma_constraint(parse(repr(E - C0 / (2 * m))), m, E, C0=C0)
    assert res.converged
    assert np.all(res.sigma.values == 0.0)
    assert np.max(np.abs(res.residual.values)) <= 1e-8


def test_sigma_riccati_closed_form():
    s0 = 0.5
    res = sigma_constraint(parse("1.5"), 0.5, 1.5, C0=0.0, sigma0=s0)
    assert res.converged
    xs = res.sigma.x
    assert np.max(np.abs(res.sigma.values[:, 0] - s0 / (1 + s0 * xs))) <= 1e-6
    assert np.max(np.abs(res.residual.values)) <= 1e-6


def test_sigma_trivial():
    res = sigma_constraint(parse("2"), 1.0, 2.0, C0=0.0, sigma0=0.0)
    assert np.all(res.sigma.values == 0.0)


def test_sigma_closed_form_lie_integral_is_conserved():
    """A sigma solving the constraint gives a conserved Case I closed form."""
    m, E, C0 = 0.5, 1.0, 0.6
    V = parse("1 + x/4")
    res = sigma_constraint(V, m, E, C0=C0, x0=0.0, x1=1.0, grid=2001)
    assert res.converged and np.max(np.abs(res.residual.values)) <= 1e-7
    from ckr_lie.model import ConstantMass, ProblemSpec, GaugeTriple
    from ckr_lie.conserved import UpsilonTriple as U
    from ckr_lie.ode import SampledPath, antiderivative

    S = antiderivative(res.sigma, 0.0, 1.0).values[:, 0]
    xs = res.sigma.x
    # C- / C+ = C0 with C+ = 1
    u = U(SampledPath(xs, C0 * np.exp(-2 * S)), 0.0, SampledPath(xs, np.exp(2 * S)))
    sig_spline = res.sigma.spline()
    a1 = lambda x: sig_spline(x).ravel() ** 2 + sig_spline.derivative()(x).ravel() - 2 * m * (evaluate(V, x) - E)
    # a3 U1 = a1 U3 holds on the grid
    assert np.max(np.abs(u.coefficients(xs)[:, 0] - a1(xs) * u.coefficients(xs)[:, 2])) <= 1e-6


def test_sigma_branch_validation():
    with pytest.raises(InvariantError):
        sigma_constraint(parse("1"), 1.0, 1.0, branch="huge")


def test_sigma_nonconvergence_is_flagged():
    res = sigma_constraint(parse("50*x^2"), 1.0, 0.0, C0=0.0, x0=0.0, x1=3.0, max_iter=5)
    assert not res.converged
    assert res.iterations <= 5


# -- mass -----------------------------------------------------------------------------

def test_mass_algebraic_branch():
    M = mass_constraint(parse("0"), 2.0, 1.0, 0.0)
    assert np.all(M.values == 2.0)
    M = mass_constraint(parse("x^2"), 4.0, 2.0, 0.0, x0=0.0, x1=1.0)
    assert M.values[-1, 0] == pytest.approx(1.5)


def test_mass_manufactured_exponential():
    a, B0, E = 1.0, 1.0, 2.0
    V = parse("2 - exp(x) - exp(-x)")  # E - B0 M - a^2 M'^2 / M^3 with M = e^x
    M = mass_constraint(V, E, B0, a, M0=1.0, x0=0.0, x1=1.0)
    assert M.status == "completed"
    assert np.max(np.abs(M.values[:, 0] - np.exp(M.x))) <= 1e-6


def test_mass_branch_exhaustion():
    with pytest.raises(NumericalError) as info:
        mass_constraint(parse("0"), 1.0, 1.0, 1.0, M0=0.5, x0=0.0, x1=5.0, sign=1)
    assert info.value.x is not None


def test_mass_validation():
    with pytest.raises(InvariantError):
        mass_constraint(parse("0"), 1.0, 0.0, 0.0)
    with pytest.raises(InvariantError):
        mass_constraint(parse("0"), 1.0, 1.0, 1.0)


# -- Swanson --------------------------------------------------------------------------

def test_swanson_oscillator_residual():
    sw = SwansonParams((1, 0, 0, 0, 0), parse("1"), parse("x"))
    r = swanson_condition(sw, 0.5, XS)
    assert np.max(np.abs(r.values[:, 0] - 2 * XS)) <= 1e-10
    assert r.values[-1, 0] == pytest.approx(2.0, abs=1e-10)


def test_swanson_constant_k2():
    assert np.all(swanson_residual(1.0, parse("1"), parse("3.5"), XS).values == 0.0)


@pytest.mark.parametrize("E", [0.5, 1.25])
def test_swanson_manufactured(E):
    sw = manufactured_swanson(E)
    grid = np.linspace(-1.0, 1.0, 41)
    assert np.max(np.abs(swanson_condition(sw, E, grid).values)) <= 1e-10
    assert np.max(np.abs(swanson_energy_residual(sw, E, grid).values)) <= 1e-10


def test_swanson_manufactured_integral_is_conserved():
    E = 0.5
    sw = manufactured_swanson(E)
    c = build_case3(sw, E)
    u = closed_form_upsilon(LieIntegralSpec("III", 1.0, 1.0), swanson=sw)
    assert np.max(np.abs(euler_residual(c, u, XS))) <= 1e-8
    rep = conservation_check(u, integrate_ckr(c, 0.0, (1.0, 0.3), 1.0))
    assert rep.relative <= 1e-8


def test_swanson_requires_k1_zero():
    sw = SwansonParams((1.0, 0.2, 0.1, 0.0, 0.0), parse("1"), parse("x"))
    with pytest.raises(InvariantError):
        swanson_condition(sw, 0.5, XS)
    with pytest.raises(InvariantError):
        closed_form_upsilon(LieIntegralSpec("III"), swanson=sw)
