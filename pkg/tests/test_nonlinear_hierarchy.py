import math
import random
from fractions import Fraction

import pytest

from engine.hierarchy import Z_FORM, GeneralRiccatiHierarchySpec, HierarchyState, residual
from engine.series import TruncatedSeries
from errors import ClosureRequired, DependencyConeViolation, DomainError
from systems.nonlinear_hierarchy import (
    CoverageVerdict,
    PointwiseSolution,
    SigmaVector,
    SpecialSolution,
    SpecialSolutionId,
    UncoupledInvariance,
    apply_uncoupled_invariance,
    assemble_solution,
    classifying_residual,
    closed_form_lambda,
    closed_form_lambda_sigma,
    coverage_check,
    lambda_table,
    lie_bracket,
    matched_lambda_y3,
    singular_at_origin,
    special_residual,
    special_solution,
    sub_algebra_generator,
    uncoupled_constraint_residual,
    y3_prefactor,
    z_expansion,
)

NONLINEAR = GeneralRiccatiHierarchySpec.nonlinear()
SEED = tuple(Fraction(j) for j in range(1, 11))


def test_forward_table_matches_closed_forms():
    table = lambda_table(SEED, 2, 4, 6)
    for n in range(1, 5):
        for k in range(4):
            assert table[n, k] == closed_form_lambda(SEED, 2, n, k)
    assert table.recurrence_residual() == 0


def test_forward_table_needs_seeds():
    with pytest.raises(DependencyConeViolation):
        lambda_table(SEED[:8], 2, 4, 6)


def test_forward_solution_is_exact():
    state = assemble_solution(lambda_table(SEED, 2, 4, 6))
    assert state.base_point == 2
    assert residual(NONLINEAR, state).exact_zero


def test_backward_table_matches_closed_forms():
    sigma = SigmaVector((0, 1, 1, 1))
    table = lambda_table(sigma, 0, 3, 3)
    assert table[3, 0] == 1
    assert table[3, 1] == 1
    assert not table.derived
    assert table[1, 1] == closed_form_lambda_sigma(sigma, 1, 1)


def test_backward_table_with_float_constants():
    sigma = SigmaVector((0.3, 0.5, -0.2, 0.1))
    table = lambda_table(sigma, 0, 4, 3)
    assert table[2, 2] == pytest.approx(closed_form_lambda_sigma(sigma, 2, 2), rel=1e-10)


def test_backward_table_needs_closure():
    with pytest.raises(ClosureRequired):
        lambda_table(SigmaVector((0, 1, 1, 1)), 0, 3, 5)


def test_closure_fills_higher_orders():
    table = lambda_table(SigmaVector((0, 1, 1, 1)), 0, 3, 5, closure=lambda k: Fraction(1, k))
    assert (3, 4) in table.derived
    assert (1, 5) in table.derived
    assert table[3, 5] == Fraction(1, 5)
    assert table.recurrence_residual() == 0


def test_origin_solution_is_exact():
    table = lambda_table(SigmaVector((0, 1, 1, 1)), 0, 3, 5, closure=[0] * 6)
    state = assemble_solution(table)
    assert state.form == Z_FORM
    assert residual(NONLINEAR, state).exact_zero


@pytest.mark.parametrize("solution", [
    SpecialSolution(SpecialSolutionId.Y1),
    SpecialSolution(SpecialSolutionId.Y2),
])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_rational_special_solutions(solution, n):
    assert special_residual(solution, n, Fraction(3, 2)) == 0


def test_shifted_y1():
    solution = SpecialSolution(SpecialSolutionId.Y1, tau=0.7)
    assert special_residual(solution, 2, 1.3) == pytest.approx(0, abs=1e-12)


def test_y3_prefactors():
    assert y3_prefactor(1) == 1
    assert y3_prefactor(2) == pytest.approx(math.sqrt(3))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_y3_residual(n):
    assert special_residual(SpecialSolution(SpecialSolutionId.Y3), n, 1.7) == pytest.approx(0, abs=1e-9)


def test_y3_needs_positive_x():
    with pytest.raises(DomainError):
        special_residual(SpecialSolution(SpecialSolutionId.Y3), 1, -1.0)


def test_coverage_of_y1_is_global():
    report = coverage_check(SpecialSolution(SpecialSolutionId.Y1), 1, 3)
    assert report.verdict is CoverageVerdict.GLOBAL
    assert all(row["covers_origin"] for row in report.rows())


def test_coverage_of_y2_is_partial():
    report = coverage_check(SpecialSolution(SpecialSolutionId.Y2), 1, 3)
    assert report.verdict is CoverageVerdict.PARTIAL
    assert not report.origin_representable
    assert not any(row["covers_origin"] for row in report.rows())


@pytest.mark.parametrize("a", [1, 2, Fraction(1, 2)])
def test_coverage_of_y3_is_partial(a):
    report = coverage_check(SpecialSolution(SpecialSolutionId.Y3), a, 5)
    assert report.verdict is CoverageVerdict.PARTIAL
    assert report.levels[0].estimate.is_infinite
    for item in report.levels:
        assert item.covers_origin is (item.level <= 2)
    for item in report.levels[2:]:
        assert item.estimate.radius == pytest.approx(float(a), rel=0.1)


@pytest.mark.parametrize("which, n, singular", [
    (SpecialSolutionId.Y1, 1, False),
    (SpecialSolutionId.Y2, 1, True),
    (SpecialSolutionId.Y2, 3, False),
    (SpecialSolutionId.Y3, 2, False),
    (SpecialSolutionId.Y3, 3, True),
])
def test_singular_levels(which, n, singular):
    assert singular_at_origin(which, n) is singular


@pytest.mark.parametrize("a", [1, 2])
def test_y3_series_matches_closed_form(a):
    levels = z_expansion(SpecialSolution(SpecialSolutionId.Y3), Fraction(a), 4, 60)
    for x in (0.5 * a, 1.5 * a):
        for n, level in enumerate(levels, start=1):
            expected = special_solution(SpecialSolution(SpecialSolutionId.Y3), n, x)
            assert float(level(x)) * x * x == pytest.approx(expected, rel=1e-8)


def test_coverage_needs_nonzero_point():
    with pytest.raises(DomainError):
        coverage_check(SpecialSolution(SpecialSolutionId.Y1), 0, 3)


@pytest.mark.parametrize("which", [UncoupledInvariance.T1INF, UncoupledInvariance.T2INF])
def test_uncoupled_invariances_map_solutions(which):
    source = PointwiseSolution.from_special(SpecialSolution(SpecialSolutionId.Y3))
    image = apply_uncoupled_invariance(which, 0.3, source)
    for n in (1, 2, 3):
        assert image.residual(n, 1.5) == pytest.approx(0, abs=1e-9)


def test_projective_image_of_origin_state_is_exact():
    state = assemble_solution(lambda_table(SigmaVector((0, 1, 1, 1)), 0, 3, 3))
    image = apply_uncoupled_invariance(UncoupledInvariance.T2INF, Fraction(1, 4), state)
    assert image.form == Z_FORM
    assert residual(NONLINEAR, image).exact_zero


def test_scaled_state_still_solves():
    state = assemble_solution(lambda_table((Fraction(1),) * 10, 1, 4, 6))
    image = apply_uncoupled_invariance(UncoupledInvariance.T1INF, 0.3, state)
    assert image.base_point == pytest.approx(math.exp(0.3))
    assert residual(NONLINEAR, image).max < 1e-12


def test_sub_algebra_bracket():
    bracket = lie_bracket(sub_algebra_generator(1, 0), sub_algebra_generator(0, 1))
    assert bracket == sub_algebra_generator(0, 1)


def test_uncoupled_constraints_hold():
    points = [Fraction(1, 2), Fraction(3), Fraction(-2, 7)]
    assert uncoupled_constraint_residual(Fraction(2), Fraction(-3), points) == (0, 0)


def test_classifying_residual():
    points = [Fraction(1, 2), Fraction(3)]
    assert classifying_residual((0, 2, 5), points) == 0
    assert classifying_residual((0, 0, 0, 1), points) == 18


@pytest.mark.parametrize("k", [0, 1, 2, 5])
def test_matched_y3_coefficients(k):
    levels = z_expansion(SpecialSolution(SpecialSolutionId.Y3), Fraction(4), 3, 6)
    assert float(levels[2][k]) == pytest.approx(float(matched_lambda_y3(Fraction(4), 3, k)), rel=1e-12)


def random_seed(rng, length):
    return tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(length))


@pytest.mark.parametrize("seed", range(5))
def test_closed_forms_on_random_seeds(seed):
    c = random_seed(random.Random(seed), 8)
    table = lambda_table(c, 1, 4, 3)
    for n in range(1, 5):
        for k in range(4):
            assert table[n, k] == closed_form_lambda(c, 1, n, k)
    assert table.recurrence_residual() == 0
    assert residual(NONLINEAR, assemble_solution(table)).exact_zero


@pytest.mark.parametrize("seed", range(3))
def test_origin_closed_forms_satisfy_constraint(seed):
    rng = random.Random(seed)
    sigma = SigmaVector(tuple(rng.uniform(-1, 1) for _ in range(4)))
    for n in range(1, 4):
        upper = [closed_form_lambda_sigma(sigma, n + 1, k) for k in range(4)]
        for k in range(4):
            square = sum(upper[k - l] * upper[l] for l in range(k + 1))
            lhs = (k + 1) * closed_form_lambda_sigma(sigma, n, k)
            assert lhs == pytest.approx(square, rel=1e-10, abs=1e-10)


def test_forward_table_rows_reach_requested_order():
    table = lambda_table(SEED, 2, 3, 7)
    assert all(len(row) == 8 for row in table.rows)


def test_square_levels_solve_in_z_form():
    ones = TruncatedSeries((Fraction(1),) + (Fraction(0),) * 9)
    assert residual(NONLINEAR, HierarchyState((ones,) * 3, Z_FORM)).exact_zero
    bumped = TruncatedSeries((Fraction(1), Fraction(1)) + (Fraction(0),) * 8)
    report = residual(NONLINEAR, HierarchyState((bumped,) * 3, Z_FORM))
    assert not report.exact_zero
    assert report.per_level_max == (1, 1)
