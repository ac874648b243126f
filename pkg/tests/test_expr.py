import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ckr_lie.errors import ExprDomainError, ParseError
from ckr_lie.expr import (
    Const,
    X,
    differentiate,
    evaluate,
    func,
    parse,
    to_string,
    wronskian,
)

from conftest import EXP_MINUS_HALF, SINC_1


@pytest.mark.parametrize(
    "text, x, expected",
    [
        ("x^2 + 1", 3.0, 10.0),
        ("exp(-x^2/2)", 0.0, 1.0),
        ("2*x^3", 2.0, 16.0),
        ("x", 7.0, 7.0),
        ("sin(x)/x", 1.0, SINC_1),
        ("-x^2", 3.0, -9.0),
        ("2^3^2", 0.0, 512.0),
        ("x**2", 4.0, 16.0),
        ("1e-3*x", 2.0, 2e-3),
        ("abs(x - 3)", 1.0, 2.0),
    ],
)
def test_parse_and_evaluate(text, x, expected):
    assert evaluate(parse(text), x) == pytest.approx(expected, rel=1e-15, abs=0)


@pytest.mark.parametrize(
    "text, x",
    [("log(x)", 0.0), ("log(x)", -1.0), ("sqrt(x)", -1.0), ("1/x", 0.0), ("x^0.5", -2.0), ("x^(-1)", 0.0)],
)
def test_domain_errors(text, x):
    with pytest.raises(ExprDomainError):
        evaluate(parse(text), x)


def test_domain_error_reports_location():
    with pytest.raises(ExprDomainError) as info:
        evaluate(parse("log(x)"), np.array([1.0, 2.0, -0.5]))
    assert info.value.x == -0.5


@pytest.mark.parametrize(
    "text, offset",
    [("sin(x", 3), ("x +", 3), ("foo(x)", 0), ("2 * y", 4), ("(x))", 3), ("", 0)],
)
def test_parse_errors_carry_offsets(text, offset):
    # an unclosed parenthesis is reported at the opening bracket
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.offset == offset
    assert "offset" in str(info.value)


def test_parse_error_offset_counts_bytes():
    # the Greek letter takes two bytes in UTF-8
    with pytest.raises(ParseError) as info:
        parse("1 + α")
    assert info.value.offset == 4


def test_vector_evaluation_matches_scalar():
    e = parse("exp(-x^2/2)*cos(3*x) + x")
    xs = np.linspace(-2, 2, 9)
    vec = evaluate(e, xs)
    assert np.array_equal(vec, [evaluate(e, float(x)) for x in xs])


def test_constant_expression_broadcasts():
    assert evaluate(parse("3.5"), 1.0) == 3.5
    assert np.shape(evaluate(parse("3.5"), np.zeros(4))) in ((), (4,))


@pytest.mark.parametrize(
    "text, x, expected",
    [
        ("sin(x)", 0.0, 1.0),
        ("exp(-x^2/2)", 1.0, -EXP_MINUS_HALF),
        ("3.5", 2.0, 0.0),
        ("x^3", 2.0, 12.0),
        ("log(x)", 4.0, 0.25),
        ("sqrt(x)", 4.0, 0.25),
        ("tan(x)", 0.0, 1.0),
        ("tanh(x)", 0.0, 1.0),
        ("abs(x)", -2.0, -1.0),
        ("abs(x)", 0.0, 0.0),
    ],
)
def test_differentiate(text, x, expected):
    assert evaluate(differentiate(parse(text)), x) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_second_derivative_of_constant_vanishes():
    e = differentiate(differentiate(Const(4.2)))
    assert evaluate(e, np.linspace(-3, 3, 7)) == pytest.approx(0.0)


def test_variable_exponent_rejected():
    with pytest.raises(ValueError):
        differentiate(parse("2^x"))


def test_wronskian_examples():
    xs = np.linspace(-3, 3, 13)
    assert np.all(evaluate(wronskian(X, X), xs) == 0)
    # W(u, v) = u'v - uv', so W(sin, cos) = cos^2 + sin^2 = +1
    assert evaluate(wronskian(func("sin", X), func("cos", X)), xs) == pytest.approx(np.ones_like(xs))
    v = parse("exp(2*x)")
    assert evaluate(wronskian(3.0, v), xs) == pytest.approx(-3.0 * 2.0 * np.exp(2 * xs))


def test_wronskian_antisymmetric(rng):
    u, v = parse("sin(x)*x"), parse("cosh(x) + x^2")
    xs = rng.uniform(-2, 2, 10)
    assert evaluate(wronskian(u, v), xs) == pytest.approx(-evaluate(wronskian(v, u), xs), rel=1e-14)


def test_round_trip_is_exact(rng):
    e = parse("-x^2 + 3.25*exp(-(x - 0.1)^2/2)/(1 + x^2) - sqrt(abs(x))")
    again = parse(to_string(e))
    xs = rng.uniform(-3, 3, 20)
    assert np.array_equal(evaluate(e, xs), evaluate(again, xs))


def test_operator_overloads():
    e = 2 * X**2 - 1 / (1 + X)
    assert e(1.0) == pytest.approx(1.5)
    assert str(e) == to_string(e)


# -- random expression sampler ------------------------------------------------------

SAFE_UNARY = ["sin", "cos", "exp", "tanh", "sinh", "cosh"]


def random_expr(rng, depth=0):
    """Expressions that are smooth on [-1, 1] and of moderate size."""
    r = rng.random()
    if depth >= 3 or r < 0.25:
        return X if rng.random() < 0.6 else Const(round(float(rng.uniform(-2, 2)), 3))
    if r < 0.45:
        return func(str(rng.choice(SAFE_UNARY)), random_expr(rng, depth + 1))
    if r < 0.55:
        return random_expr(rng, depth + 1) ** int(rng.integers(0, 4))
    if r < 0.65:
        # denominators bounded away from zero
        return random_expr(rng, depth + 1) / (2.5 + func("sin", random_expr(rng, depth + 1)))
    op = rng.choice(["+", "-", "*"])
    a, b = random_expr(rng, depth + 1), random_expr(rng, depth + 1)
    return {"+": a + b, "-": a - b, "*": a * b}[op]


def central_difference(e, x, h=1e-5):
    return (evaluate(e, x + h) - evaluate(e, x - h)) / (2 * h)


def test_random_derivatives_match_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(100):
        e = random_expr(rng)
        de = differentiate(e)
        for x in rng.uniform(-1, 1, 10):
            exact = evaluate(de, x)
            fd = central_difference(e, x)
            assert abs(exact - fd) <= 1e-6 * (1 + abs(exact)), to_string(e)


def test_random_round_trips():
    rng = np.random.default_rng(11)
    xs = rng.uniform(-1, 1, 10)
    for _ in range(100):
        e = random_expr(rng)
        assert np.array_equal(
            np.broadcast_to(evaluate(parse(to_string(e)), xs), xs.shape),
            np.broadcast_to(evaluate(e, xs), xs.shape),
        )


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6, allow_nan=False), st.floats(-5, 5))
def test_constant_round_trip_property(c, x):
    e = Const(c) * X + Const(-c)
    assert evaluate(parse(to_string(e)), x) == evaluate(e, x)
    assert math.isfinite(evaluate(differentiate(e), x))
