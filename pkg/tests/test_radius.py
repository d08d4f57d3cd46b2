import math
from fractions import Fraction

import pytest

from engine.radius import radius_estimate
from errors import AllZeroTail, InsufficientCoefficients


def test_geometric_radius():
    estimate = radius_estimate([2 ** k for k in range(41)])
    assert estimate.radius == pytest.approx(0.5, rel=1e-9)
    assert estimate.contains(0.4)
    assert not estimate.contains(0.6)


@pytest.mark.parametrize("method", ["root", "tail"])
def test_entire_function(method):
    estimate = radius_estimate([Fraction(1, math.factorial(k)) for k in range(61)], method)
    assert estimate.is_infinite
    assert estimate.describe() == "Infinite"


def test_divergent_series():
    estimate = radius_estimate([math.factorial(k) for k in range(61)])
    assert estimate.is_zero
    assert estimate.describe() == "Zero"
    assert not estimate.contains(1e-6)


def test_tail_method_ignores_power_prefactor():
    estimate = radius_estimate([(k + 1) * 2 ** k for k in range(41)], "tail")
    assert estimate.radius == pytest.approx(0.5, abs=0.03)


def test_too_few_coefficients():
    with pytest.raises(InsufficientCoefficients):
        radius_estimate([1] * 10)


def test_all_zero_tail():
    coeffs = [1, 1] + [0] * 20
    assert radius_estimate(coeffs).all_zero_tail
    with pytest.raises(AllZeroTail):
        radius_estimate(coeffs, strict=True)


def test_unknown_method():
    with pytest.raises(ValueError):
        radius_estimate([1] * 20, "ratio")


@pytest.mark.parametrize("r", [Fraction(1, 2), Fraction(1), Fraction(3)])
def test_inverse_power_radius(r):
    estimate = radius_estimate([1 / r ** k for k in range(201)])
    assert estimate.radius == pytest.approx(float(r), rel=0.05)


def test_factorial_squared_is_zero():
    estimate = radius_estimate([math.factorial(k) ** 2 for k in range(61)])
    assert estimate.describe() == "Zero"
