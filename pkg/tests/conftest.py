import math

import numpy as np
import pytest

from ckr_lie.expr import parse
from ckr_lie.model import CkrCoefficients

# Reference values fixed from closed forms before the solvers were written.
TAN_1 = 1.5574077246549023  # tan(1)
E_1 = 2.718281828459045  # e
EXP_MINUS_HALF = 0.6065306597126334  # exp(-1/2)
GAUSS_INTEGRAL_0_1 = 0.7468241328124271  # int_0^1 exp(-x^2)
SINC_1 = 0.8414709848078965  # sin(1)/1

assert abs(TAN_1 - math.tan(1.0)) < 1e-16
assert abs(EXP_MINUS_HALF - math.exp(-0.5)) < 1e-16


@pytest.fixture
def oscillator_coefficients():
    return CkrCoefficients(parse("1 - x^2"), 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
