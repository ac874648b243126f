import math

import numpy as np
import pytest

from ckr_lie.errors import InvariantError, NumericalError
from ckr_lie.expr import parse
from ckr_lie.model import CkrCoefficients
from ckr_lie.ode import (
    BLOW_UP,
    COMPLETED,
    STEP_LIMIT,
    IntegratorConfig,
    LinearSystem,
    SampledPath,
    antiderivative,
    integrate_ckr,
    integrate_linear,
)

from conftest import E_1, GAUSS_INTEGRAL_0_1, TAN_1


@pytest.mark.parametrize(
    "kwargs",
    [{"method": "euler"}, {"h": 0.0}, {"h": -1e-3}, {"atol": 0.0}, {"blowup": -1.0}, {"max_steps": 0}],
)
def test_config_validation(kwargs):
    with pytest.raises(InvariantError):
        IntegratorConfig(**kwargs)


def test_sampled_path_requires_monotone_nodes():
    with pytest.raises(InvariantError):
        SampledPath([0.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    path = SampledPath([0.0, 1.0, 2.0], [0.0, 10.0, 0.0])
    assert path(0.25) == pytest.approx(2.5)
    assert path(1.5) == pytest.approx(5.0)


def test_zero_field_is_constant():
    t = integrate_ckr(CkrCoefficients(0, 0, 0), 0.0, (1.0, 2.0), 1.0)
    assert t.status == COMPLETED
    assert np.all(t.p == [1.0, 2.0])


@pytest.mark.parametrize("method", ["rk4", "rk45"])
def test_tangent_flow(method):
    t = integrate_ckr(CkrCoefficients(1, 0, 1), 0.0, (0.0, 0.0), 1.0, IntegratorConfig(method=method))
    assert t.x[-1] == 1.0
    assert t.p2[-1] == pytest.approx(TAN_1, abs=1e-8)
    assert np.all(t.p1 == 0.0)


def test_oscillator_flow(oscillator_coefficients):
    t = integrate_ckr(oscillator_coefficients, 0.0, (0.0, 0.0), 1.0)
    assert t.p[-1] == pytest.approx([0.0, 1.0], abs=1e-8)
    assert np.max(np.abs(t.p2 - t.x)) <= 1e-8


def test_rk4_fourth_order():
    c = CkrCoefficients(1, 0, 1)
    errors = []
    for h in (0.02, 0.01):
        t = integrate_ckr(c, 0.0, (0.0, 0.0), 1.0, IntegratorConfig(h=h))
        errors.append(abs(t.p2[-1] - TAN_1))
    assert 12.0 <= errors[0] / errors[1] <= 20.0


@pytest.mark.parametrize("method", ["rk4", "rk45"])
def test_blow_up_status(method):
    t = integrate_ckr(CkrCoefficients(1, 0, 1), 0.0, (0.0, 0.0), 3.0, IntegratorConfig(method=method))
    assert t.status == BLOW_UP
    assert t.x_stop < math.pi / 2 + 0.1
    assert np.all(np.isfinite(t.p))


def test_step_limit_status():
    t = integrate_ckr(CkrCoefficients(1, 0, 1), 0.0, (0.0, 0.0), 1.0, IntegratorConfig(max_steps=10))
    assert t.status == STEP_LIMIT
    assert t.x.size == 11


def test_axis_is_invariant(rng):
    a1 = parse("cos(3*x) + 1")
    c = CkrCoefficients(a1, parse("x/2"), parse("1 + x^2/4"))
    for p2 in rng.uniform(-1, 1, 5):
        t = integrate_ckr(c, 0.0, (0.0, p2), 0.5)
        assert np.max(np.abs(t.p1)) <= 1e-12


def test_backward_integration():
    t = integrate_ckr(CkrCoefficients(1, 0, 1), 0.0, (0.0, 0.0), -1.0)
    assert t.p2[-1] == pytest.approx(-TAN_1, abs=1e-8)


def test_initial_state_above_threshold():
    with pytest.raises(NumericalError):
        integrate_ckr(CkrCoefficients(1, 0, 1), 0.0, (0.0, 1e9), 1.0)


def test_linear_examples():
    const = integrate_linear(LinearSystem([[0.0]]), 0.0, [3.0], 1.0)
    assert np.all(const.values == 3.0)
    growth = integrate_linear(LinearSystem([[1.0]]), 0.0, [1.0], 1.0)
    assert growth.values[-1, 0] == pytest.approx(E_1, abs=1e-8)
    rot = integrate_linear(LinearSystem([[0.0, 1.0], [-1.0, 0.0]]), 0.0, [1.0, 0.0], math.pi / 2)
    assert rot.values[-1] == pytest.approx([0.0, -1.0], abs=1e-8)


def test_linear_forcing_and_callables():
    # y' = -y + x with y(0) = 0 has y = x - 1 + exp(-x)
    sys_ = LinearSystem([[lambda x: -1.0]], forcing=[parse("x")])
    path = integrate_linear(sys_, 0.0, [0.0], 2.0)
    assert path.values[-1, 0] == pytest.approx(1.0 + math.exp(-2.0), abs=1e-10)


def test_linear_dimension_mismatch():
    with pytest.raises(ValueError):
        integrate_linear(LinearSystem([[0.0]]), 0.0, [1.0, 2.0], 1.0)


@pytest.mark.parametrize(
    "f, x1, expected",
    [("0", 1.0, 0.0), ("x", 2.0, 2.0), ("exp(-x^2)", 1.0, GAUSS_INTEGRAL_0_1)],
)
def test_antiderivative(f, x1, expected):
    F = antiderivative(parse(f), 0.0, x1)
    assert F.values[0, 0] == 0.0
    assert F.values[-1, 0] == pytest.approx(expected, abs=1e-8)


def test_antiderivative_of_samples_and_complex():
    xs = np.linspace(0.0, 1.0, 201)
    F = antiderivative(SampledPath(xs, np.exp(-xs**2)), 0.0, 1.0)
    assert F.values[-1, 0] == pytest.approx(GAUSS_INTEGRAL_0_1, abs=1e-8)
    G = antiderivative(SampledPath(xs, np.exp(1j * xs)), 0.0, 1.0)
    assert G.values[-1, 0] == pytest.approx((np.exp(1j) - 1) / 1j, abs=1e-9)


def test_spline_derivative_accuracy():
    xs = np.linspace(0.0, 2.0, 401)
    path = SampledPath(xs, np.sin(xs))
    xq = np.linspace(0.1, 1.9, 37)
    assert np.max(np.abs(path.derivative(xq) - np.cos(xq))) < 1e-9
