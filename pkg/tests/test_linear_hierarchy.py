import math
from fractions import Fraction
from math import factorial

import pytest
from numpy.polynomial import Polynomial

from engine.hierarchy import GeneralRiccatiHierarchySpec, residual
from engine.series import TruncatedSeries
from errors import DependencyConeViolation, DomainError, MissingConstants, TransformSingular
from systems.linear_hierarchy import (
    CoefVector,
    EquivalenceKind,
    Table1Row,
    TransformParams,
    apply_equivalence_transform,
    bnk_closed_form,
    bnk_table,
    convergence_domains,
    ctilde_first_level_form,
    ctilde_level_form,
    divergence_witness,
    flow_solution,
    generate_from_free,
    group_matrix,
    ic_compatible_infinitesimals,
    inverse_group_matrix,
    l2_infinitesimals,
    l2_point_transform,
    reparam_ctilde,
    restrictions_ok,
    solve_ivp_pair,
)

LINEAR = GeneralRiccatiHierarchySpec.linear()


def exp_minus_x(order):
    return TruncatedSeries(tuple(Fraction((-1) ** k, factorial(k)) for k in range(order + 1)))


def test_flow_coefficients():
    state = flow_solution(CoefVector.from_function(lambda j: Fraction(j), 8), 2, 5)
    assert state.level(2).coeffs == (2, -3, 2, Fraction(-5, 6), Fraction(1, 4), Fraction(-7, 120))


def test_flow_needs_enough_constants():
    with pytest.raises(DependencyConeViolation):
        flow_solution(CoefVector.ones(10), 4, 8)


def test_generate_from_free_reproduces_flow():
    state = generate_from_free(3, exp_minus_x(12), 5, (Fraction(-1), Fraction(1)), order=8)
    flow = flow_solution(CoefVector.ones(13), 5, 8)
    for n in range(1, 6):
        assert state.level(n).same_coefficients(flow.level(n))
    assert residual(LINEAR, state).exact_zero


def test_generate_from_free_needs_constants():
    with pytest.raises(MissingConstants):
        generate_from_free(3, exp_minus_x(12), 5, (Fraction(-1),))


def test_generate_from_free_needs_order():
    with pytest.raises(DependencyConeViolation):
        generate_from_free(1, exp_minus_x(6), 5, order=6)


def test_bnk_table_matches_closed_form():
    table = bnk_table(12)
    for n in range(2, 13):
        for k in range(1, n):
            assert table[n, k] == bnk_closed_form(n, k)
    assert table[1, 1] == 0
    assert table[4, 4] == 0
    assert [table[4, k] for k in (1, 2, 3)] == [6, 6, 1]


def test_group_matrix_inverse():
    x, epsilon = Fraction(1, 3), Fraction(1, 2)
    product = group_matrix(x, epsilon, 7) @ inverse_group_matrix(x, epsilon, 7)
    assert product.is_identity()


def test_inverse_group_matrix_singular():
    with pytest.raises(TransformSingular):
        inverse_group_matrix(Fraction(2), Fraction(1, 2), 4)


def test_l1_scaling_preserves_solutions():
    state = flow_solution(CoefVector.ones(16), 4, 12)
    scaled = apply_equivalence_transform(EquivalenceKind.L1, TransformParams(1, unit=Fraction(2)), state)
    assert scaled.level(1).coeffs[1] == -4
    assert residual(LINEAR, scaled).exact_zero


def test_l2_image_is_flow_of_reparametrized_constants():
    depth, order, epsilon = 6, 40, Fraction(1, 2)
    ones = CoefVector.ones(depth + order)
    image = apply_equivalence_transform(EquivalenceKind.L2, TransformParams(epsilon),
                                        flow_solution(ones, depth, order))
    direct = flow_solution(group_matrix(0, epsilon, depth + order).apply(ones), depth, order)
    assert image.unit_exponent == direct.unit_exponent == epsilon
    for n in range(1, depth + 1):
        assert image.level(n).same_coefficients(direct.level(n))
    assert residual(LINEAR, image).exact_zero


def test_l2_needs_origin():
    state = flow_solution(CoefVector.ones(10), 2, 6, base_point=1)
    with pytest.raises(ValueError):
        apply_equivalence_transform(EquivalenceKind.L2, TransformParams(Fraction(1, 2)), state)


def test_l2_point_transform_agrees_with_series_image():
    epsilon, x = Fraction(1, 2), Fraction(1, 4)
    state = flow_solution(CoefVector.ones(44), 4, 40)
    image = apply_equivalence_transform(EquivalenceKind.L2, TransformParams(epsilon), state)
    xt, yt = l2_point_transform(x, [math.exp(-0.25)] * 4, epsilon)
    assert xt == Fraction(2, 7)
    values, _ = image.evaluate(xt)
    assert values == pytest.approx(yt, rel=1e-10)


def test_l2f_flow_preserves_solutions():
    state = flow_solution(CoefVector.ones(34), 4, 30)
    graph = apply_equivalence_transform(
        EquivalenceKind.L2F, TransformParams(0.3, f=Polynomial([0.5, 0.2])), state)
    assert max(graph.residual(0.4)) < 1e-7


def test_l2f_needs_generator():
    state = flow_solution(CoefVector.ones(10), 2, 6)
    with pytest.raises(ValueError):
        apply_equivalence_transform(EquivalenceKind.L2F, TransformParams(0.3), state)


def test_reparam_ctilde_low_entries():
    epsilon = Fraction(1, 2)
    c = reparam_ctilde(CoefVector.ones(8), epsilon, 8)
    assert c.entries[:3] == (1, 1, 2 * epsilon + 1)
    assert list(c.entries) == ctilde_first_level_form(CoefVector.ones(8), epsilon, 8)
    assert c.unit_exponent == epsilon


def test_restrictions():
    check = restrictions_ok(Fraction(1, 2), Fraction(1), Fraction(0))
    assert check.all
    assert not restrictions_ok(Fraction(3, 2), Fraction(1), Fraction(0)).third
    with pytest.raises(TransformSingular):
        restrictions_ok(Fraction(1, 2), Fraction(1), Fraction(-1))


def test_ivp_pair_shares_initial_values():
    size = 4 + 60
    seed = CoefVector((Fraction(1),) * size, unit_exponent=-1)
    pair = solve_ivp_pair(group_matrix(0, 1, size).apply(seed), 1, 4, 60)
    ya, yb = pair.initial_values()
    assert ya == yb
    assert pair.evaluate_a(0.3) == pytest.approx(pair.evaluate_b(0.3), rel=1e-9)


def test_ivp_pair_singular_point():
    size = 2 + 10
    pair = solve_ivp_pair(CoefVector.ones(size), Fraction(1), 2, 10)
    with pytest.raises(TransformSingular):
        pair.evaluate_b(Fraction(-1))


def test_divergence_witness_grows():
    c = CoefVector.from_function(factorial, 41)
    sums = divergence_witness(c, 2, orders=(20, 40))
    assert sums[1] > sums[0] > 1e6


@pytest.mark.parametrize("row, ya_kind, yb_kind", [
    (Table1Row.REPARAMETRIZED_CONSTANT, "finite", "infinite"),
    (Table1Row.FACTORIAL, "finite", "infinite"),
    (Table1Row.CONSTANT, "infinite", "finite"),
    (Table1Row.FACTORIAL_SQUARED, "zero", "zero"),
])
def test_convergence_domains(row, ya_kind, yb_kind):
    report = convergence_domains(row, 1)
    assert report.ya.estimate.kind == ya_kind
    assert report.yb.estimate.kind == yb_kind
    for domain, kind in ((report.ya, ya_kind), (report.yb, yb_kind)):
        if kind == "finite":
            assert domain.estimate.radius == pytest.approx(1.0, abs=0.15)


def test_convergence_domain_labels():
    report = convergence_domains(Table1Row.CONSTANT, 1)
    assert report.ya.describe() == "R"
    assert report.yb.describe().startswith("|x/(1+eps*x)| < ")
    assert convergence_domains(Table1Row.FACTORIAL_SQUARED, 1).ya.describe() == "x = 0"


def test_ic_compatible_infinitesimals_vanish_at_initial_point():
    field = ic_compatible_infinitesimals(lambda x, y: 1.0, lambda x, y: x, 1.0, 1.0, 0.0, 2.0)
    assert field(0.0, 3.0)[0] == 0.0
    assert field(1.0, 2.0)[1] == 0.0
    assert field(1.0, 3.0) == pytest.approx((math.exp(-1), math.exp(-1)))
    with pytest.raises(DomainError):
        ic_compatible_infinitesimals(lambda x, y: 1.0, lambda x, y: 1.0, 0.0, 1.0, 0.0, 0.0)


def test_l2_infinitesimals_are_tangent_to_group():
    x, y, h = 0.3, [0.5, -0.2, 0.7, 1.1], 1e-6
    xi, eta = l2_infinitesimals(x, y)
    (x_plus, y_plus), (x_minus, y_minus) = l2_point_transform(x, y, h), l2_point_transform(x, y, -h)
    assert xi == pytest.approx((x_plus - x_minus) / (2 * h), abs=1e-6)
    assert eta == pytest.approx([(p - m) / (2 * h) for p, m in zip(y_plus, y_minus)], abs=1e-6)


def test_flow_is_a_semigroup():
    c = CoefVector((Fraction(1), Fraction(2), Fraction(-1), Fraction(3)) + (Fraction(0),) * 12)
    x1, x2 = Fraction(1, 3), Fraction(-5, 4)
    moved, _ = flow_solution(c, 12, 4).evaluate(x1)
    shifted = flow_solution(CoefVector(tuple(moved) + (Fraction(0),) * 4), 8, 4)
    direct, _ = flow_solution(c, 8, 4).evaluate(x1 + x2)
    assert shifted.evaluate(x2)[0] == direct


def test_l2_with_opposite_parameters_is_identity():
    epsilon = Fraction(1, 2)
    state = flow_solution(CoefVector.ones(46), 6, 40)
    there = apply_equivalence_transform(EquivalenceKind.L2, TransformParams(epsilon), state)
    back = apply_equivalence_transform(EquivalenceKind.L2, TransformParams(-epsilon), there)
    assert back.unit_exponent == 0
    for n in range(1, 7):
        assert back.level(n).same_coefficients(state.level(n))


def test_l2_image_evaluates_like_reparametrized_flow():
    depth, order, epsilon = 6, 40, Fraction(1, 2)
    ones = CoefVector.ones(depth + order)
    image = apply_equivalence_transform(EquivalenceKind.L2, TransformParams(epsilon),
                                        flow_solution(ones, depth, order))
    direct = flow_solution(reparam_ctilde(ones, epsilon, depth + order), depth, order)
    for x in (Fraction(-1), Fraction(-1, 2), Fraction(0), Fraction(1, 2), Fraction(1)):
        yb, _ = image.evaluate(x)
        expected, _ = direct.evaluate(x)
        assert max(abs(a - b) for a, b in zip(yb, expected)) < 1e-10


def test_ctilde_forms_agree_exactly():
    epsilon, size = Fraction(1, 2), 10
    ones = CoefVector.ones(size)
    matrix = group_matrix(0, epsilon, size).apply(ones)
    assert ctilde_first_level_form(ones, epsilon, size) == list(matrix.entries)
    for j in range(2, size + 1):
        for n in range(2, j + 1):
            assert ctilde_level_form(ones, epsilon, n, j - n) == matrix.c(j)


def test_reparametrized_flow_diverges_where_image_stays_finite():
    epsilon, x, size = Fraction(1, 2), Fraction(3), 81
    ctilde = group_matrix(0, epsilon, size).apply(CoefVector.ones(size))
    sums = divergence_witness(ctilde, x, orders=(40, 80))
    assert sums[1] > sums[0]
    pair = solve_ivp_pair(ctilde, epsilon, 1, 80)
    assert all(math.isfinite(float(v)) for v in pair.evaluate_b(x))
