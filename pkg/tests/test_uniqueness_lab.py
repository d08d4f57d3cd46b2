import math

import numpy as np
import pytest

from errors import DomainError
from systems.uniqueness_lab import (
    BumpSpec,
    alt_solution,
    bump_derivative,
    figure_rows,
    reference_solution,
    uniqueness_bounds,
    uniqueness_interval,
    verify_global_pair,
)


def test_bump_needs_positive_width():
    with pytest.raises(DomainError):
        BumpSpec(0)


def test_bump_is_flat_at_origin():
    spec = BumpSpec(1)
    for order in range(6):
        assert bump_derivative(spec, order, 0.0) == 0.0
    assert bump_derivative(spec, 3, 1e-3) == 0.0


def test_bump_derivatives():
    spec = BumpSpec(1)
    assert bump_derivative(spec, 0, 0.5) == pytest.approx(math.exp(-4))
    assert bump_derivative(spec, 1, 0.5) == pytest.approx(16 * math.exp(-4))
    assert bump_derivative(spec, 2, 0.5) == pytest.approx((4 * 2 ** 6 - 6 * 2 ** 4) * math.exp(-4))


@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_bump_derivative_parity(order):
    spec = BumpSpec(0.5)
    sign = -1 if order % 2 else 1
    assert bump_derivative(spec, order, -0.7) == pytest.approx(sign * bump_derivative(spec, order, 0.7))


def test_solutions_share_initial_values():
    spec = BumpSpec(1)
    for level in range(1, 6):
        assert alt_solution(spec, level, 0.0) == reference_solution(level, 0.0) == 1.0


@pytest.mark.parametrize("level, expected", [(1, 0.932), (2, 0.686), (3, 0.540), (4, 0.449)])
def test_uniqueness_interval_shrinks_with_level(level, expected):
    assert uniqueness_interval(BumpSpec(1), level, 0.01) == pytest.approx(expected, abs=0.01)


def test_narrow_bump_interval():
    assert uniqueness_interval(BumpSpec(0.001), 1, 0.01) == pytest.approx(0.0295, abs=5e-4)


def test_interval_is_symmetric():
    interval = uniqueness_bounds(BumpSpec(1), 2, 0.01)
    assert interval.left == pytest.approx(-interval.right, abs=1e-5)
    assert interval.contains(0.0)
    assert not interval.contains(interval.right + 0.01)


def test_interval_needs_positive_threshold():
    with pytest.raises(DomainError):
        uniqueness_bounds(BumpSpec(1), 1, 0.0)


def test_both_global_solutions_solve_the_hierarchy():
    report = verify_global_pair(BumpSpec(1), 4, np.linspace(-2, 2, 41))
    assert report.max < 1e-12


def test_perturbed_level_is_detected():
    report = verify_global_pair(BumpSpec(1), 4, np.linspace(-2, 2, 41), perturbation={2: 1e-3})
    assert report.alternative[0] > 9e-4
    assert report.alternative[1] < 1e-12


def test_figure_rows():
    xs = [-1.0, 0.0, 1.0]
    rows, intervals = figure_rows(BumpSpec(1), [1, 2], xs)
    assert len(rows) == 6
    assert len(intervals) == 2
    middle = rows[1]
    assert middle.x == 0.0
    assert middle.in_interval
    assert middle.y_alternative == middle.y_reference
    assert not rows[2].in_interval


def test_interval_needs_reachable_threshold():
    with pytest.raises(DomainError):
        uniqueness_bounds(BumpSpec(1), 1, 1.5)
