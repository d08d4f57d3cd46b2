import math
from fractions import Fraction

import pytest
from numpy.polynomial import Polynomial

from engine.series import TruncatedSeries
from errors import DependencyConeViolation, DomainError, WrongDirection
from systems.moment_hierarchy import (
    GaussianSpec,
    MomentSystemSpec,
    ambiguity_pair,
    backward_solution,
    forward_a_coefficients,
    forward_solved_form,
    gaussian_moments,
    init_coeff_recursion,
    integrate_truncated,
    kolmogorov_point_transform,
    moment_radius,
    moment_residual,
    quadrature_moments,
    recursion_series,
    reference_moment_series,
    reference_moments,
    reference_radius,
    reference_rows,
    taylor_series,
)

FORWARD = MomentSystemSpec(1, 0, -1)


def test_gaussian_moments():
    assert gaussian_moments(GaussianSpec(), 4) == [1, 1, Fraction(3, 2), Fraction(5, 2), Fraction(19, 4)]


def test_gaussian_needs_positive_variance():
    with pytest.raises(DomainError):
        GaussianSpec(variance=0)


def test_backward_solution_is_heat_flow():
    start = GaussianSpec()
    t = Fraction(1, 3)
    assert backward_solution(gaussian_moments(start, 8), t, 8) == gaussian_moments(start.evolved(t), 8)


def test_backward_solution_needs_backward_system():
    with pytest.raises(WrongDirection):
        backward_solution([1] * 5, 1, 4, FORWARD)
    with pytest.raises(ValueError):
        backward_solution([1] * 5, 1, 4, MomentSystemSpec(2, 0, 0))


def test_backward_solution_needs_constants():
    with pytest.raises(DependencyConeViolation):
        backward_solution([1] * 3, 1, 4)


@pytest.mark.parametrize("level, expected", [
    (2, [(-1, 1)]),
    (4, [(1, 2), (2, 0)]),
    (6, [(-1, 3), (-14, 1)]),
    (8, [(1, 4), (44, 2), (60, 0)]),
])
def test_even_solved_form(level, expected):
    u0 = TruncatedSeries(tuple(Fraction(1, k + 2) for k in range(12)))
    u1 = TruncatedSeries(tuple(Fraction(k) for k in range(12)))
    result = forward_solved_form(u0, u1, level)
    total = None
    for weight, order in expected:
        term = u0
        for _ in range(order):
            term = term.differentiate()
        term = term.scale(weight)
        total = term if total is None else total.add(term)
    assert result.same_coefficients(total)


def test_solved_form_solves_forward_system():
    u0 = TruncatedSeries(tuple(Fraction((-1) ** k, k + 1) for k in range(14)))
    u1 = TruncatedSeries(tuple(Fraction(k * k + 1, 3) for k in range(14)))
    series = [forward_solved_form(u0, u1, level) for level in range(9)]
    assert all(value == 0 for value in moment_residual(FORWARD, series))


def test_solved_form_needs_derivatives():
    short = TruncatedSeries((Fraction(1), Fraction(2)))
    with pytest.raises(DependencyConeViolation):
        forward_solved_form(short, short, 6)


def test_coefficient_table():
    table = forward_a_coefficients(4, 12)
    assert table.a1(1, 1) == 2
    assert table.a1(1, 2) == 14
    assert table.a2(2, 2) == 6
    assert set(table.to_dict()) == {"A1", "A2"}


def test_initial_moments_fix_taylor_data():
    first, second = init_coeff_recursion(gaussian_moments(GaussianSpec(), 25), 12)
    assert first[1] == Fraction(-3, 2)
    assert second[1] == Fraction(-5, 2)
    u0, u1 = reference_moment_series(12)
    assert taylor_series(first).coeffs == u0.coeffs
    assert taylor_series(second).coeffs == u1.coeffs


def test_recursion_series_matches_closed_form():
    u0, u1 = recursion_series(12)
    expected = reference_moment_series(12)
    for got, want in zip((u0, u1), expected):
        assert max(abs(float(p - q)) for p, q in zip(got.coeffs, want.coeffs)) < 1e-10


def test_initial_moments_needed():
    with pytest.raises(DependencyConeViolation):
        init_coeff_recursion([1] * 10, 8)


def test_reference_series_matches_closed_form():
    u0, u1 = reference_moment_series(40)
    expected = reference_moments(0.2)
    assert float(u0(0.2)) == pytest.approx(expected[0], rel=1e-10)
    assert float(u1(0.2)) == pytest.approx(expected[1], rel=1e-10)


def test_reference_radius():
    assert reference_radius() == pytest.approx(0.832, abs=1e-3)
    for estimate in moment_radius():
        assert estimate.method == "tail"
        assert estimate.radius == pytest.approx(0.825, abs=0.05)


def test_reference_needs_forward_time():
    with pytest.raises(DomainError):
        reference_moments(-0.1)


def test_quadrature_matches_closed_form():
    u0, u1 = quadrature_moments(0.25, 1)
    expected = reference_moments(0.25)
    assert u0 == pytest.approx(expected[0], rel=1e-6)
    assert u1 == pytest.approx(expected[1], rel=1e-6)


def test_kolmogorov_round_trip():
    point = (0.2, 0.5, 1.3)
    image = kolmogorov_point_transform("forward", point)
    assert image[0] == pytest.approx((math.exp(0.8) - 1) / 4)
    assert kolmogorov_point_transform("inverse", image) == pytest.approx(point)


def test_kolmogorov_inverse_domain():
    with pytest.raises(DomainError):
        kolmogorov_point_transform("inverse", (-1.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        kolmogorov_point_transform("sideways", (0.0, 0.0, 1.0))


def test_backward_truncation_is_exact():
    moments = gaussian_moments(GaussianSpec(), 8)
    trajectory = integrate_truncated(MomentSystemSpec(), moments, 0.5, 8)
    expected = backward_solution(moments, Fraction(1, 2), 8)
    for n in range(9):
        assert trajectory.at_end(n) == pytest.approx(float(expected[n]), rel=1e-10)
    assert trajectory.u0_drift == 0


def test_forward_truncation_starts_from_moments():
    moments = gaussian_moments(GaussianSpec(), 8)
    trajectory = integrate_truncated(FORWARD, moments, 0.1, 8, steps=64)
    assert len(trajectory.times) == 65
    assert trajectory.level(2)[0] == 1.5
    assert trajectory.at_end(0) == pytest.approx(reference_moments(0.1)[0], abs=0.02)


def test_truncation_runs_forward():
    with pytest.raises(DomainError):
        integrate_truncated(FORWARD, [1] * 5, -0.1, 4)
    assert integrate_truncated(FORWARD, [1] * 5, 0, 4).values.shape == (1, 5)


def make_pair():
    return ambiguity_pair((Polynomial([1, -1.5]), Polynomial([1, -2.5])),
                          (Polynomial([1]), Polynomial([2])), 0.5, 0.5)


def test_ambiguous_solutions_share_initial_data():
    pair = make_pair()
    assert pair.initial_data_agree()
    for level in range(6):
        assert pair.solved_form(level, 0.0) == pair.solved_form(level, 0.0, perturbed=False)


def test_ambiguous_solutions_differ_later():
    pair = make_pair()
    assert abs(pair.solved_form(4, 0.5) - pair.solved_form(4, 0.5, perturbed=False)) > 1e-3


def test_ambiguity_needs_positive_widths():
    with pytest.raises(DomainError):
        ambiguity_pair((Polynomial([1]), Polynomial([1])), (Polynomial([1]), Polynomial([1])), 0, 1)


def test_solved_form_rows_match_closed_form():
    rows = reference_rows(0.5, samples=6, depths=(8,))
    closed = {(row["t"], row["n"]): row["u_n"] for row in rows if row["source"] == "closed_form"}
    solved = {(row["t"], row["n"]): row["u_n"] for row in rows if row["source"] == "solved_form"}
    assert len(closed) == 12
    for key, value in closed.items():
        assert solved[key] == pytest.approx(value, abs=1e-8)
    assert {n for _, n in solved} == {0, 1, 2, 3}
