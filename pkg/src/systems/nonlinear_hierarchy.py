import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import factorial
from typing import Callable, FrozenSet, List, Optional, Sequence, Tuple, Union

from constants import COVERAGE_MARGIN, COVERAGE_ORDER, LAMBDA_CHECK_TOLERANCE, RADIUS_METHOD_TAIL
from engine.hierarchy import Y_FORM, Z_FORM, HierarchyState, Producer, truncate_guarantee
from engine.radius import RadiusEstimate, radius_estimate
from engine.series import TruncatedSeries, compose_moebius, polynomial_series
from errors import (
    BasePointMismatch,
    ClosureRequired,
    DependencyConeViolation,
    DomainError,
    InternalInconsistency,
    MissingConstants,
    TransformSingular,
)
from utils.scalars import Scalar, all_exact, exact_power, format_scalar, is_exact, magnitude, to_exact

logger = logging.getLogger(__name__)

CLOSED_FORM_ORDER = 3


def _unit(exponent: Scalar) -> Scalar:
    """exp(exponent), exactly 1 for an exact zero."""
    if exponent == 0 and is_exact(exponent):
        return Fraction(1)
    return math.exp(float(exponent))


@dataclass(frozen=True)
class SigmaVector:
    """Integration constants sigma_1..sigma_M of the a = 0 general solution."""

    entries: Tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def sigma(self, j: int) -> Scalar:
        return self.entries[j - 1]


def closed_form_lambda(c: Sequence[Scalar], a: Scalar, n: int, k: int) -> Scalar:
    """lambda_{n,k} for k <= 3 at a != 0, from seeds c (c[0] is c_1)."""
    if a == 0:
        raise DomainError("the c-seeded closed forms need a != 0")
    if not 0 <= k <= CLOSED_FORM_ORDER:
        raise ValueError(f"closed forms cover k <= {CLOSED_FORM_ORDER}")
    if len(c) < n + k:
        raise DependencyConeViolation(f"lambda_{n},{k} needs c up to index {n + k}")
    if all_exact(list(c[:n + k]) + [a]):
        a = to_exact(a)
    cn = [None] + list(c)
    if k == 0:
        return cn[n]
    if k == 1:
        return -(cn[n] - cn[n + 1] ** 2) / a
    if k == 2:
        return (cn[n] - 2 * cn[n + 1] ** 2 + cn[n + 1] * cn[n + 2] ** 2) / a ** 2
    return -(3 * cn[n] - 9 * cn[n + 1] ** 2 + 9 * cn[n + 1] * cn[n + 2] ** 2
             - 2 * cn[n + 1] * cn[n + 2] * cn[n + 3] ** 2 - cn[n + 2] ** 4) / (3 * a ** 3)


def closed_form_lambda_sigma(sigma: SigmaVector, n: int, k: int) -> Scalar:
    """lambda_{n,k} for k <= 3 at a = 0."""
    if not 0 <= k <= CLOSED_FORM_ORDER:
        raise ValueError(f"closed forms cover k <= {CLOSED_FORM_ORDER}")
    if len(sigma) < k + 1:
        raise MissingConstants(f"lambda_{n},{k} needs sigma_1..sigma_{k + 1}")
    s1 = sigma.sigma(1)
    weight = Fraction(2) ** (1 - n)
    if k == 0:
        return _unit(weight * s1)
    s2 = sigma.sigma(2)
    if k == 1:
        return _unit((weight - 1) * s1) * s2
    s3 = sigma.sigma(3)
    if k == 2:
        return (Fraction(1, 2 ** n) * _unit((weight - 2) * s1)
                * (s2 ** 2 * (2 ** n - 3 ** n) + 2 * 3 ** (n - 1) * _unit(s1) * s3))
    s4 = sigma.sigma(4)
    return (Fraction(1, 2 ** (n + 1)) * _unit((weight - 3) * s1)
            * (s2 ** 3 * (2 ** (n + 1) + 4 ** (n + 1) - 2 * 3 ** (n + 1))
               + (4 * 3 ** n - 4 ** (n + 1)) * _unit(s1) * s2 * s3
               + 4 ** n * _unit(2 * s1) * s4))


Closure = Union[Sequence[Scalar], Callable[[int], Scalar]]


@dataclass(frozen=True)
class LambdaTable:
    """Expansion coefficients lambda_{n,k} of y_n = x^2 sum_k lambda_{n,k} (x - a)^k."""

    rows: Tuple[Tuple, ...]
    expansion_point: Scalar
    seed: Union[Tuple, SigmaVector]
    derived: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)

    @property
    def depth(self) -> int:
        return len(self.rows)

    @property
    def order(self) -> int:
        return len(self.rows[0]) - 1

    def __getitem__(self, index: Tuple[int, int]) -> Scalar:
        n, k = index
        return self.rows[n - 1][k]

    def recurrence_residual(self) -> float:
        """max |k l_{n,k} + a(k+1) l_{n,k+1} + l_{n,k} - sum_l l_{n+1,k-l} l_{n+1,l}|."""
        a = self.expansion_point
        worst = 0.0
        for n in range(1, self.depth):
            upper = self.order - 1 if a != 0 else self.order
            for k in range(upper + 1):
                value = (k + 1) * self[n, k] - _square_sum(self.rows[n], k)
                if a != 0:
                    value += a * (k + 1) * self[n, k + 1]
                worst = max(worst, magnitude(value))
        return worst

    def to_dict(self) -> dict:
        return {
            "a": format_scalar(self.expansion_point),
            "rows": [[format_scalar(v) for v in row] for row in self.rows],
            "derived_by_constraint": sorted([list(entry) for entry in self.derived]),
        }


def _square_sum(row: Sequence, k: int) -> Scalar:
    return sum((row[k - l] * row[l] for l in range(1, k + 1)), row[k] * row[0])


def lambda_table(seed, a: Scalar, depth: int, order: int,
                 closure: Optional[Closure] = None) -> LambdaTable:
    """Solve the lambda recurrence; forward in k for a != 0, backward in n for a = 0."""
    if depth < 1 or order < 0:
        raise ValueError("depth must be positive and order nonnegative")
    if a != 0:
        return _forward_table(tuple(seed), a, depth, order)
    if not isinstance(seed, SigmaVector):
        seed = SigmaVector(tuple(seed))
    return _backward_table(seed, depth, order, closure)


def _forward_table(c: Tuple, a: Scalar, depth: int, order: int) -> LambdaTable:
    top = depth + order
    if len(c) < top:
        raise DependencyConeViolation(
            f"depth {depth}, order {order} needs c_1..c_{top}, got {len(c)}")
    if all_exact(c + (a,)):
        c = tuple(to_exact(v) for v in c)
        a = to_exact(a)
    else:
        c = tuple(float(v) for v in c)
        a = float(a)
    # row n is needed to order depth + order - n
    reach = truncate_guarantee(top - 1, order, Producer.LAMBDA, constants=top) if order else {}
    rows = {top: [c[top - 1]]}
    for n in range(top - 1, 0, -1):
        row = [c[n - 1]]
        upper = rows[n + 1]
        for k in range(reach.get(n, 0)):
            row.append((_square_sum(upper, k) - (k + 1) * row[k]) / ((k + 1) * a))
        rows[n] = row
    logger.debug("lambda table a=%s: %d rows to order %d", a, depth, order)
    return LambdaTable(tuple(tuple(rows[n]) for n in range(1, depth + 1)), a, c)


def _closure_value(closure: Closure, k: int) -> Scalar:
    if callable(closure):
        return closure(k)
    return closure[k] if k < len(closure) else 0


def _backward_table(sigma: SigmaVector, depth: int, order: int,
                    closure: Optional[Closure]) -> LambdaTable:
    if order > CLOSED_FORM_ORDER and closure is None:
        raise ClosureRequired(
            f"a = 0 rows beyond k = {CLOSED_FORM_ORDER} need closure values for the top level")
    known = min(order, CLOSED_FORM_ORDER)
    top = [closed_form_lambda_sigma(sigma, depth, k) for k in range(known + 1)]
    derived = set()
    for k in range(known + 1, order + 1):
        top.append(_closure_value(closure, k))
        derived.add((depth, k))
    if not all_exact(top):
        top = [float(v) for v in top]
    rows = {depth: top}
    for n in range(depth - 1, 0, -1):
        upper = rows[n + 1]
        rows[n] = [_square_sum(upper, k) / (k + 1) for k in range(order + 1)]
        derived.update((n, k) for k in range(known + 1, order + 1))
    if derived:
        logger.warning("a = 0 table: %d entries derived from the top-level closure", len(derived))
    for n in range(1, depth + 1):
        for k in range(known + 1):
            expected = closed_form_lambda_sigma(sigma, n, k)
            got = rows[n][k]
            if is_exact(got) and is_exact(expected):
                agree = got == expected
            else:
                agree = math.isclose(float(got), float(expected), rel_tol=LAMBDA_CHECK_TOLERANCE,
                                     abs_tol=LAMBDA_CHECK_TOLERANCE)
            if not agree:
                raise InternalInconsistency(
                    f"lambda_{n},{k}: constraint gives {got}, closed form {expected}")
    return LambdaTable(tuple(tuple(rows[n]) for n in range(1, depth + 1)), Fraction(0), sigma,
                       frozenset(derived))


def assemble_solution(table: LambdaTable) -> HierarchyState:
    """y-form state at a != 0, z-form (z_n = y_n / x^2) at a = 0."""
    a = table.expansion_point
    levels = [TruncatedSeries(row, a) for row in table.rows]
    if a == 0:
        return HierarchyState(tuple(levels), Z_FORM)
    square = polynomial_series((0, 0, 1), a, table.order)
    return HierarchyState(tuple(square.mul(level) for level in levels), Y_FORM)


class SpecialSolutionId(str, Enum):
    Y1 = "Y1"
    Y2 = "Y2"
    Y3 = "Y3"


@dataclass(frozen=True)
class SpecialSolution:
    which: SpecialSolutionId
    tau: Optional[Scalar] = None


def y3_exponent(n: int) -> Fraction:
    """alpha_n = 2 + 2^(2-n)."""
    return 2 + Fraction(2) ** (2 - n)


def y3_prefactor(n: int) -> Scalar:
    """b_n = 5^(-2^-n) prod_{k<n} (1 + 2^(2-k))^(2^(k-n)), exact when rational."""
    exponents = {Fraction(5): -Fraction(1, 2 ** n)}
    for k in range(n):
        base = 1 + Fraction(2) ** (2 - k)
        exponents[base] = exponents.get(base, 0) + Fraction(2) ** (k - n)
    factors = list(exponents.items())
    exact = [exact_power(base, power) for base, power in factors]
    if all(v is not None for v in exact):
        return math.prod(exact)
    log_value = sum(float(power) * math.log(base) for base, power in factors)
    return math.exp(log_value)


def _y1_factor(solution: SpecialSolution, n: int) -> Scalar:
    if solution.tau is None:
        return Fraction(1)
    return _unit(Fraction(2) ** (1 - n) * solution.tau if is_exact(solution.tau)
                 else 2.0 ** (1 - n) * solution.tau)


def special_solution(solution: SpecialSolution, n: int, x: Scalar) -> Scalar:
    which = SpecialSolutionId(solution.which)
    if which is SpecialSolutionId.Y1:
        return _y1_factor(solution, n) * x * x
    if which is SpecialSolutionId.Y2:
        return {1: -1, 2: x}.get(n, x * 0)
    if x <= 0:
        raise DomainError(f"Y3 needs x > 0, got {x}")
    prefactor = y3_prefactor(n)
    power = exact_power(x, y3_exponent(n))
    if power is None:
        power = float(x) ** float(y3_exponent(n))
    return prefactor * power


def special_derivative(solution: SpecialSolution, n: int, x: Scalar) -> Scalar:
    which = SpecialSolutionId(solution.which)
    if which is SpecialSolutionId.Y1:
        return 2 * _y1_factor(solution, n) * x
    if which is SpecialSolutionId.Y2:
        return 1 if n == 2 else 0
    if x <= 0:
        raise DomainError(f"Y3 needs x > 0, got {x}")
    alpha = y3_exponent(n)
    power = exact_power(x, alpha - 1)
    if power is None:
        power = float(x) ** float(alpha - 1)
    return y3_prefactor(n) * alpha * power


def special_residual(solution: SpecialSolution, n: int, x: Scalar) -> Scalar:
    """y'_n - y_n/x - y_{n+1}^2/x^3 at x."""
    if x == 0:
        raise DomainError("the hierarchy is singular at x = 0")
    if is_exact(x):
        x = to_exact(x)
    y = special_solution(solution, n, x)
    y_next = special_solution(solution, n + 1, x)
    return special_derivative(solution, n, x) - y / x - y_next * y_next / x ** 3


def matched_lambda_y3(a: Scalar, n: int, k: int) -> Scalar:
    """b_n a^(beta - k) beta(beta - 1)...(beta - k + 1) / k!, beta = 2^(2-n)."""
    if a == 0:
        raise DomainError("matched coefficients need a != 0")
    beta = Fraction(2) ** (2 - n)
    falling = Fraction(1)
    for j in range(k):
        falling *= beta - j
    power = exact_power(a, beta - k)
    if power is None:
        power = float(a) ** float(beta - k)
    return y3_prefactor(n) * power * falling / factorial(k)


def z_expansion(solution: SpecialSolution, a: Scalar, depth: int, order: int) -> List[TruncatedSeries]:
    """Series of z_n = y_n / x^2 around a for the first ``depth`` levels."""
    if a == 0:
        raise DomainError("z-expansions are taken around a != 0")
    which = SpecialSolutionId(solution.which)
    x = polynomial_series((0, 1), a, order)
    zero = TruncatedSeries.constant(x[0] * 0, order, x.base_point)
    levels = []
    for n in range(1, depth + 1):
        if which is SpecialSolutionId.Y1:
            levels.append(TruncatedSeries.constant(_y1_factor(solution, n), order, x.base_point))
        elif which is SpecialSolutionId.Y2:
            if n == 1:
                levels.append(-(x.mul(x)).reciprocal())
            elif n == 2:
                levels.append(x.reciprocal())
            else:
                levels.append(zero)
        else:
            levels.append(x.power(Fraction(2) ** (2 - n)).scale(y3_prefactor(n)))
    return levels


def singular_at_origin(which: SpecialSolutionId, n: int) -> bool:
    """True when level n of the z-expansion has a pole or branch point at x = 0."""
    which = SpecialSolutionId(which)
    if which is SpecialSolutionId.Y2:
        return n <= 2
    if which is SpecialSolutionId.Y3:
        return n >= 3
    return False


class CoverageVerdict(str, Enum):
    GLOBAL = "global"
    PARTIAL = "partial"
    NONE = "none"


@dataclass(frozen=True)
class LevelCoverage:
    level: int
    estimate: RadiusEstimate
    covers_origin: bool


@dataclass(frozen=True)
class CoverageReport:
    solution: SpecialSolutionId
    a: Scalar
    levels: Tuple[LevelCoverage, ...]
    verdict: CoverageVerdict
    origin_representable: bool
    recurrence_residual: float

    @property
    def radius(self) -> float:
        return min(level.estimate.radius for level in self.levels)

    def rows(self) -> List[dict]:
        return [{"solution": self.solution.value, "a": format_scalar(self.a), "level": item.level,
                 "radius_estimate": item.estimate.describe(), "covers_origin": item.covers_origin}
                for item in self.levels]


def coverage_check(solution: SpecialSolution, a: Scalar, depth: int,
                   order: int = COVERAGE_ORDER) -> CoverageReport:
    """Match a special solution's z-expansion at a to lambda coefficients and size its disc."""
    which = SpecialSolutionId(solution.which)
    levels = z_expansion(solution, a, depth + 1, order)
    table = LambdaTable(tuple(level.coeffs for level in levels), a, ())
    residual = table.recurrence_residual()
    scale = max(magnitude(v) for row in table.rows for v in row) or 1.0
    if residual > LAMBDA_CHECK_TOLERANCE * scale:
        raise InternalInconsistency(
            f"{which.value} expansion at a = {a} violates the recurrence by {residual:g}")

    origin_representable = which is not SpecialSolutionId.Y2
    # x = 0 must lie inside the estimated disc by a relative margin
    reach = magnitude(a) * (1 + COVERAGE_MARGIN)
    coverage = []
    for n, level in enumerate(levels[:depth], start=1):
        estimate = radius_estimate(level.coeffs, RADIUS_METHOD_TAIL)
        covers = (origin_representable and not singular_at_origin(which, n)
                  and estimate.contains(reach))
        coverage.append(LevelCoverage(n, estimate, covers))

    if any(item.estimate.is_zero for item in coverage):
        verdict = CoverageVerdict.NONE
    elif all(item.estimate.is_infinite for item in coverage) and origin_representable:
        verdict = CoverageVerdict.GLOBAL
    else:
        verdict = CoverageVerdict.PARTIAL
    logger.info("coverage %s at a=%s: %s (radius %s)", which.value, a, verdict.value,
                min((item.estimate for item in coverage), key=lambda e: e.radius).describe())
    return CoverageReport(which, a, tuple(coverage), verdict, origin_representable, residual)


class UncoupledInvariance(str, Enum):
    T1INF = "T1inf"
    T2INF = "T2inf"


@dataclass(frozen=True)
class PointwiseSolution:
    """A hierarchy solution given by value(n, x) and slope(n, x)."""

    value: Callable[[int, float], float]
    slope: Callable[[int, float], float]

    @classmethod
    def from_special(cls, solution: SpecialSolution) -> "PointwiseSolution":
        return cls(lambda n, x: special_solution(solution, n, x),
                   lambda n, x: special_derivative(solution, n, x))

    def residual(self, n: int, x: float) -> float:
        if x == 0:
            raise DomainError("the hierarchy is singular at x = 0")
        y_next = self.value(n + 1, x)
        return self.slope(n, x) - self.value(n, x) / x - y_next * y_next / x ** 3


def apply_uncoupled_invariance(which: UncoupledInvariance, epsilon: Scalar, target):
    """Scaling (T1inf) or projective (T2inf) symmetry applied to a state or pointwise solution."""
    which = UncoupledInvariance(which)
    if epsilon == 0:
        return target
    if isinstance(target, PointwiseSolution):
        return _transform_pointwise(which, float(epsilon), target)
    if which is UncoupledInvariance.T1INF:
        return _scale_state(float(epsilon), target)
    return _projective_state(epsilon, target)


def _transform_pointwise(which: UncoupledInvariance, epsilon: float,
                         target: PointwiseSolution) -> PointwiseSolution:
    if which is UncoupledInvariance.T1INF:
        unit = math.exp(epsilon)
        return PointwiseSolution(
            lambda n, xt: unit * unit * target.value(n, xt / unit),
            lambda n, xt: unit * target.slope(n, xt / unit),
        )

    def source(xt: float) -> Tuple[float, float]:
        w = 1 + epsilon * xt
        if w == 0:
            raise TransformSingular(f"T2inf singular at x~ = -1/eps = {xt}")
        return xt / w, w

    def value(n: int, xt: float) -> float:
        x, w = source(xt)
        return w * target.value(n, x)

    def slope(n: int, xt: float) -> float:
        x, w = source(xt)
        return epsilon * target.value(n, x) + target.slope(n, x) / w

    return PointwiseSolution(value, slope)


def _scale_state(epsilon: float, state: HierarchyState) -> HierarchyState:
    unit = math.exp(epsilon)
    shift = 0 if state.form == Z_FORM else 2
    levels = []
    for level in state.materialized().levels:
        coeffs = [float(c) * unit ** (shift - k) for k, c in enumerate(level.coeffs)]
        levels.append(TruncatedSeries(tuple(coeffs), float(level.base_point) * unit, level.valid_order))
    return HierarchyState(tuple(levels), state.form)


def _projective_state(epsilon: Scalar, state: HierarchyState) -> HierarchyState:
    if state.base_point != 0:
        raise BasePointMismatch("T2inf acts on states based at 0")
    if not (state.backend == "exact" and is_exact(epsilon)):
        epsilon = float(epsilon)
        state = HierarchyState(tuple(level.to_float() for level in state.materialized().levels),
                               state.form)
    order = max(level.order for level in state.levels)
    # 1 - eps x = 1 / (1 + eps x~)
    weight = polynomial_series((1, epsilon), 0, order)
    if state.form == Z_FORM:
        weight = weight.reciprocal()
    levels = tuple(weight.mul(compose_moebius(level, epsilon)) for level in state.levels)
    return HierarchyState(levels, state.form, state.unit_exponent)


def _poly_value(coeffs: Sequence, x: Scalar) -> Scalar:
    value = x * 0
    for c in reversed(coeffs):
        value = value * x + c
    return value


def _poly_deriv(coeffs: Sequence) -> Tuple:
    return tuple(k * c for k, c in enumerate(coeffs))[1:] or (0,)


def _poly_mul(a: Sequence, b: Sequence) -> Tuple:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return tuple(out)


def _poly_sub(a: Sequence, b: Sequence) -> Tuple:
    size = max(len(a), len(b))
    a = tuple(a) + (0,) * (size - len(a))
    b = tuple(b) + (0,) * (size - len(b))
    out = [x - y for x, y in zip(a, b)]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class UncoupledGenerator:
    """xi = phi(x), eta_n = alpha(x) y_n; polynomials as coefficient tuples in x."""

    phi: Tuple
    alpha: Tuple


def sub_algebra_generator(c1: Scalar, c2: Scalar) -> UncoupledGenerator:
    """phi = c1 x + c2 x^2, alpha = 2 c1 + c2 x."""
    return UncoupledGenerator((0, c1, c2), (2 * c1, c2))


def lie_bracket(first: UncoupledGenerator, second: UncoupledGenerator) -> UncoupledGenerator:
    phi = _poly_sub(_poly_mul(first.phi, _poly_deriv(second.phi)),
                    _poly_mul(second.phi, _poly_deriv(first.phi)))
    alpha = _poly_sub(_poly_mul(first.phi, _poly_deriv(second.alpha)),
                      _poly_mul(second.phi, _poly_deriv(first.alpha)))
    return UncoupledGenerator(phi, alpha)


def uncoupled_constraint_residual(c1: Scalar, c2: Scalar,
                                  points: Sequence[Scalar]) -> Tuple[Scalar, Scalar]:
    """Max of |alpha' x - phi' + phi/x| and |alpha_n - 2 alpha_{n+1} - phi' + 3 phi/x|."""
    generator = sub_algebra_generator(c1, c2)
    dphi, dalpha = _poly_deriv(generator.phi), _poly_deriv(generator.alpha)
    first, second = 0, 0
    for x in points:
        if x == 0:
            raise DomainError("constraint residuals need x != 0")
        if is_exact(x):
            x = to_exact(x)
        phi, alpha = _poly_value(generator.phi, x), _poly_value(generator.alpha, x)
        slope = _poly_value(dphi, x)
        first = max(first, abs(_poly_value(dalpha, x) * x - slope + phi / x))
        second = max(second, abs(alpha - 2 * alpha - slope + 3 * phi / x))
    return first, second


def classifying_residual(phi: Sequence[Scalar], points: Sequence[Scalar]) -> Scalar:
    """Max |x phi'' - 2 phi' + 2 phi/x|; zero exactly for phi = c1 x + c2 x^2."""
    dphi = _poly_deriv(phi)
    ddphi = _poly_deriv(dphi)
    worst = 0
    for x in points:
        if x == 0:
            raise DomainError("classifying residual needs x != 0")
        if is_exact(x):
            x = to_exact(x)
        value = x * _poly_value(ddphi, x) - 2 * _poly_value(dphi, x) + 2 * _poly_value(phi, x) / x
        worst = max(worst, abs(value))
    return worst
