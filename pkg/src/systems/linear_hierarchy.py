import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from constants import (
    DEFAULT_EPSILON,
    L2F_STEP_DIVISOR,
    RADIUS_METHOD_TAIL,
    TABLE1_ORDER,
)
from engine.hierarchy import HierarchyState, Producer, truncate_guarantee
from engine.radius import RadiusEstimate, radius_estimate
from engine.series import TruncatedSeries, compose_moebius, evaluate, polynomial_series
from errors import (
    BasePointMismatch,
    DependencyConeViolation,
    DomainError,
    InternalInconsistency,
    MissingConstants,
    TransformSingular,
)
from utils.scalars import Scalar, all_exact, format_scalar, is_exact, to_exact

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoefVector:
    """Constants c_1..c_M, optionally carrying a common factor exp(unit_exponent)."""

    entries: Tuple
    unit_exponent: Scalar = 0

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    @classmethod
    def ones(cls, length: int) -> "CoefVector":
        return cls((Fraction(1),) * length)

    @classmethod
    def from_function(cls, func: Callable[[int], Scalar], length: int) -> "CoefVector":
        """Entries func(1), ..., func(length)."""
        return cls(tuple(func(j) for j in range(1, length + 1)))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def c(self, j: int) -> Scalar:
        """Entry j, counted from 1."""
        return self.entries[j - 1]

    @property
    def is_exact(self) -> bool:
        return all_exact(self.entries)

    def head(self, length: int) -> "CoefVector":
        return CoefVector(self.entries[:length], self.unit_exponent)

    def values(self) -> List[float]:
        """Entries with the unit factor applied, as floats."""
        factor = math.exp(float(self.unit_exponent))
        return [float(c) * factor for c in self.entries]

    def to_dict(self) -> dict:
        return {"entries": [format_scalar(c) for c in self.entries],
                "unit_exponent": format_scalar(self.unit_exponent)}


def _as_coef_vector(c) -> CoefVector:
    return c if isinstance(c, CoefVector) else CoefVector(tuple(c))


def flow_solution(c, depth: int, order: int, base_point: Scalar = 0) -> HierarchyState:
    """y_n(x) = sum_k c_{n+k} (-1)^k (x - a)^k / k!."""
    c = _as_coef_vector(c)
    if len(c) < depth + order:
        raise DependencyConeViolation(
            f"flow to depth {depth}, order {order} needs {depth + order} constants, got {len(c)}")
    guarantee = truncate_guarantee(depth, order, Producer.FLOW, constants=len(c))
    exact = c.is_exact
    levels = []
    for n in range(1, depth + 1):
        coeffs = []
        for k in range(guarantee[n] + 1):
            value = c.c(n + k)
            sign = -1 if k % 2 else 1
            if exact:
                coeffs.append(to_exact(value) * sign / factorial(k))
            else:
                coeffs.append(float(value) * sign / factorial(k))
        levels.append(TruncatedSeries(tuple(coeffs), base_point))
    return HierarchyState(tuple(levels), unit_exponent=c.unit_exponent)


def generate_from_free(n_star: int, free: TruncatedSeries, depth: int,
                       constants: Sequence[Scalar] = (), order: Optional[int] = None) -> HierarchyState:
    """Hierarchy built around a freely chosen level n_star.

    Levels above are signed derivatives of ``free``; levels below are signed
    iterated antiderivatives I_k = int I_{k-1} dx + constants[k-1], so that
    y_{n_star - k} = (-1)^k I_k.
    """
    if not 1 <= n_star <= depth:
        raise ValueError(f"free level {n_star} outside 1..{depth}")
    if len(constants) < n_star - 1:
        raise MissingConstants(
            f"free level {n_star} needs {n_star - 1} integration constants, got {len(constants)}")
    above = depth - n_star
    if order is not None and free.valid_order < order + above:
        raise DependencyConeViolation(
            f"free series valid to {free.valid_order}, need {order + above}")

    levels = {n_star: free}
    current = free
    for step in range(1, above + 1):
        current = current.differentiate()
        levels[n_star + step] = current if step % 2 == 0 else -current
    current = free
    for step in range(1, n_star):
        current = current.antidifferentiate(constants[step - 1])
        levels[n_star - step] = current if step % 2 == 0 else -current
    ordered = [levels[n] for n in range(1, depth + 1)]
    if order is not None:
        guarantee = truncate_guarantee(depth, order, Producer.GENERATE_FROM_FREE)
        ordered = [level.truncate(guarantee[n]) for n, level in enumerate(ordered, start=1)]
    return HierarchyState(tuple(ordered))


@lru_cache(maxsize=None)
def _bnk_rows(depth: int) -> Tuple[Tuple[int, ...], ...]:
    rows = [(0,), (0, 0), (0, 1, 0)]
    for n in range(3, depth + 1):
        prev = rows[n - 1]
        row = [0] * (n + 1)
        for k in range(1, n):
            upper = prev[k] if k < len(prev) else 0
            row[k] = (n - 2 + k) * upper + prev[k - 1]
        rows.append(tuple(row))
    return tuple(rows)


@dataclass(frozen=True)
class BnkTable:
    """Triangular table B_{n,k}, 2 <= n <= depth, with zero boundaries."""

    depth: int
    rows: Tuple[Tuple[int, ...], ...]

    def __getitem__(self, index: Tuple[int, int]) -> int:
        n, k = index
        if n < 2 or n > self.depth or k < 1 or k >= n:
            return 0
        return self.rows[n][k]

    def to_dict(self) -> dict:
        return {str(n): [self[n, k] for k in range(1, n)] for n in range(2, self.depth + 1)}


def bnk_table(depth: int) -> BnkTable:
    """B_{n,k} = (n - 2 + k) B_{n-1,k} + B_{n-1,k-1}, seeded by B_{2,1} = 1."""
    if depth < 2:
        raise ValueError("B table needs depth >= 2")
    return BnkTable(depth, _bnk_rows(depth))


def bnk_closed_form(n: int, k: int) -> int:
    """Lah-number form C(n-2, k-1) (n-1)! / k!."""
    if n < 2 or k < 1 or k >= n:
        return 0
    return comb(n - 2, k - 1) * factorial(n - 1) // factorial(k)


@dataclass(frozen=True)
class GroupMatrix:
    """G(x, eps) = exp(unit_exponent) * body, lower triangular."""

    body: Tuple[Tuple, ...]
    unit_exponent: Scalar
    x: Scalar
    epsilon: Scalar

    @property
    def size(self) -> int:
        return len(self.body)

    def entry(self, n: int, m: int) -> Scalar:
        """Body entry in row n, column m, counted from 1."""
        return self.body[n - 1][m - 1]

    def as_array(self) -> np.ndarray:
        factor = math.exp(float(self.unit_exponent))
        return np.array([[float(v) * factor for v in row] for row in self.body])

    def apply(self, vector) -> CoefVector:
        vector = _as_coef_vector(vector)
        if len(vector) < self.size:
            raise DependencyConeViolation(f"matrix of size {self.size} needs {self.size} entries")
        entries = vector.entries
        product = []
        for row in self.body:
            terms = [v * entries[m] for m, v in enumerate(row) if v != 0]
            product.append(sum(terms[1:], terms[0]) if terms else row[0] * 0)
        return CoefVector(tuple(product), self.unit_exponent + vector.unit_exponent)

    def __matmul__(self, other: "GroupMatrix") -> "GroupMatrix":
        size = min(self.size, other.size)
        body = tuple(
            tuple(sum((self.body[i][k] * other.body[k][j] for k in range(j, i + 1)), self.body[i][i] * 0)
                  for j in range(size))
            for i in range(size))
        return GroupMatrix(body, self.unit_exponent + other.unit_exponent, self.x, self.epsilon)

    def is_identity(self) -> bool:
        return self.unit_exponent == 0 and all(
            value == (1 if i == j else 0)
            for i, row in enumerate(self.body) for j, value in enumerate(row))

    def to_dict(self) -> dict:
        return {
            "x": format_scalar(self.x),
            "epsilon": format_scalar(self.epsilon),
            "unit_exponent": format_scalar(self.unit_exponent),
            "rows": [[format_scalar(v) for v in row[:i + 1]] for i, row in enumerate(self.body)],
        }


def _lift(*values):
    if all(is_exact(v) for v in values):
        return tuple(to_exact(v) for v in values)
    return tuple(float(v) for v in values)


def group_matrix(x: Scalar, epsilon: Scalar, depth: int) -> GroupMatrix:
    """Matrix of the global L2 action on (y_1, ..., y_N) at the point x."""
    x, epsilon = _lift(x, epsilon)
    table = bnk_table(max(depth, 2))
    zero, one = x * 0, x * 0 + 1
    base = 1 - epsilon * x
    rows = [tuple([one] + [zero] * (depth - 1))]
    for n in range(2, depth + 1):
        row = [zero] * depth
        for k in range(1, n):
            row[k] = table[n, k] * epsilon ** (n - k - 1) * base ** (n + k - 1)
        rows.append(tuple(row))
    return GroupMatrix(tuple(rows), epsilon, x, epsilon)


def inverse_group_matrix(x: Scalar, epsilon: Scalar, depth: int) -> GroupMatrix:
    """G^{-1}(x, eps) = G(x / (1 - eps x), -eps)."""
    x, epsilon = _lift(x, epsilon)
    denominator = 1 - epsilon * x
    if denominator == 0:
        raise TransformSingular(f"inverse group matrix singular at eps*x = 1 (x = {x})")
    return group_matrix(x / denominator, -epsilon, depth)


class EquivalenceKind(str, Enum):
    L1 = "L1"
    L2 = "L2"
    L2F = "L2f"


DerivativeFunction = Callable[[float, int], float]


@dataclass(frozen=True)
class TransformParams:
    """Parameters of an equivalence transform.

    ``unit`` optionally supplies an exact rational value for exp(epsilon) in L1.
    ``f`` is the L2f generator: a numpy Polynomial or a callable f(x, m)
    returning the m-th derivative.
    """

    epsilon: Scalar
    unit: Optional[Scalar] = None
    f: Union[Polynomial, DerivativeFunction, None] = None
    steps: int = L2F_STEP_DIVISOR


def apply_equivalence_transform(kind: EquivalenceKind, params: TransformParams,
                                state: HierarchyState):
    """Apply L1, L2 (returning a state) or L2f (returning a pointwise graph)."""
    kind = EquivalenceKind(kind)
    if kind is EquivalenceKind.L1:
        return _apply_l1(params, state)
    if kind is EquivalenceKind.L2:
        return _apply_l2(params.epsilon, state)
    if params.f is None:
        raise ValueError("L2f needs a generator function f")
    return TransformedGraph(state, params.epsilon, _derivative_function(params.f), params.steps)


def _apply_l1(params: TransformParams, state: HierarchyState) -> HierarchyState:
    if params.epsilon == 0 and params.unit is None:
        return state
    unit = params.unit if params.unit is not None else math.exp(float(params.epsilon))
    if state.backend == "exact" and is_exact(unit):
        unit = to_exact(unit)
    else:
        unit = float(unit)
    levels = []
    for n, level in enumerate(state.levels, start=1):
        coeffs = [coeff * unit ** (n + k) for k, coeff in enumerate(level.coeffs)]
        levels.append(TruncatedSeries(tuple(coeffs), level.base_point / unit, level.valid_order))
    return HierarchyState(tuple(levels), state.form, state.unit_exponent)


def _apply_l2(epsilon: Scalar, state: HierarchyState) -> HierarchyState:
    if state.base_point != 0:
        raise BasePointMismatch("L2 acts on states based at 0")
    if epsilon == 0:
        return state
    exact = state.backend == "exact" and is_exact(epsilon)
    if exact:
        epsilon = to_exact(epsilon)
        source = state
    else:
        epsilon = float(epsilon)
        source = HierarchyState(tuple(level.to_float() for level in state.materialized().levels))
    depth = source.depth
    order = max(level.order for level in source.levels)
    table = bnk_table(max(depth, 2))
    composed = [compose_moebius(level, epsilon) for level in source.levels]
    # (1 - eps x) = 1 / (1 + eps x~)
    inverse = polynomial_series((1, epsilon), 0, order).reciprocal()
    powers = [TruncatedSeries.constant(inverse[0] * 0 + 1, order)]
    for _ in range(2 * depth):
        powers.append(powers[-1].mul(inverse))

    levels = [composed[0]]
    for n in range(2, depth + 1):
        total = None
        for k in range(1, n):
            term = powers[n + k - 1].mul(composed[k]).scale(table[n, k] * epsilon ** (n - k - 1))
            total = term if total is None else total.add(term)
        levels.append(total)
    if exact:
        return HierarchyState(tuple(levels), unit_exponent=state.unit_exponent + epsilon)
    factor = math.exp(epsilon)
    return HierarchyState(tuple(level.scale(factor) for level in levels))


def _derivative_function(f) -> DerivativeFunction:
    if isinstance(f, Polynomial):
        return lambda x, m: float(f.deriv(m)(x)) if m else float(f(x))
    return f


def l2f_generator(x: float, y: Sequence[float], f: DerivativeFunction) -> Tuple[float, List[float]]:
    """(xi, eta_1..eta_N) of the L2f tangent field."""
    eta = []
    for n in range(1, len(y) + 1):
        value = y[n - 1]
        for k in range(1, n):
            value += (-1) ** (n - k) * comb(n - 1, k - 1) * f(x, n - k) * y[k]
        eta.append(value)
    return f(x, 0), eta


def l2_infinitesimals(x: Scalar, y: Sequence[Scalar]) -> Tuple[Scalar, List[Scalar]]:
    """Tangent field of L2: xi = x^2, eta_n = y_n + (n-1)(n-2) y_{n-1} - 2(n-1) x y_n."""
    eta = []
    for n in range(1, len(y) + 1):
        value = y[n - 1] - 2 * (n - 1) * x * y[n - 1]
        if n >= 3:
            value += (n - 1) * (n - 2) * y[n - 2]
        eta.append(value)
    return x * x, eta


def l2_point_transform(x: Scalar, y: Sequence[Scalar], epsilon: Scalar) -> Tuple[Scalar, List[Scalar]]:
    """Closed global L2 at one point: x~ = x/(1 - eps x), y~ = G(x, eps) y."""
    x, epsilon = _lift(x, epsilon)
    denominator = 1 - epsilon * x
    if denominator == 0:
        raise TransformSingular(f"L2 singular at eps*x = 1 (x = {x})")
    matrix = group_matrix(x, epsilon, len(y))
    image = matrix.apply(CoefVector(tuple(y)))
    return x / denominator, image.values() if image.unit_exponent != 0 else list(image.entries)


class TransformedGraph:
    """Pointwise image of a hierarchy solution under the L2f flow.

    Points (x, y(x)) are carried along the flow of the tangent field by a
    classical RK4 integration in epsilon.
    """

    def __init__(self, source: HierarchyState, epsilon: Scalar, f: DerivativeFunction,
                 steps: int = L2F_STEP_DIVISOR):
        self.source = source
        self.epsilon = float(epsilon)
        self.f = f
        self.steps = steps

    def _rhs(self, state: np.ndarray) -> np.ndarray:
        xi, eta = l2f_generator(state[0], state[1:], self.f)
        return np.array([xi] + eta)

    def point(self, x: float) -> Tuple[float, np.ndarray]:
        values, _ = self.source.evaluate(float(x))
        state = np.array([float(x)] + [float(v) for v in values])
        if self.epsilon == 0:
            return state[0], state[1:]
        h = self.epsilon / self.steps
        for _ in range(self.steps):
            k1 = self._rhs(state)
            k2 = self._rhs(state + 0.5 * h * k1)
            k3 = self._rhs(state + 0.5 * h * k2)
            k4 = self._rhs(state + h * k3)
            state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return state[0], state[1:]

    def residual(self, x: float, h: float = 1e-3) -> List[float]:
        """|dy~_n/dx~ + y~_{n+1}| at the image of x, by fourth-order differences along x."""
        samples = [self.point(x + j * h) for j in (-2, -1, 1, 2)]
        xt0, yt0 = self.point(x)

        def slope(values):
            return (values[0] - 8 * values[1] + 8 * values[2] - values[3]) / (12 * h)

        dx = slope([s[0] for s in samples])
        dy = slope([s[1] for s in samples])
        derivative = dy / dx
        return [abs(derivative[n] + yt0[n + 1]) for n in range(len(yt0) - 1)]


def reparam_ctilde(c, epsilon: Scalar, depth: int) -> CoefVector:
    """c~ = G(0, eps) c, cross-checked against both closed summation forms."""
    c = _as_coef_vector(c)
    if len(c) < depth:
        raise DependencyConeViolation(f"need {depth} constants, got {len(c)}")
    matrix = group_matrix(0, epsilon, depth).apply(c.head(depth))
    first = ctilde_first_level_form(c, epsilon, depth)
    exact = all_exact(matrix.entries)
    for j in range(1, depth + 1):
        candidates = [("first-level sum", first[j - 1])]
        for n in range(2, j + 1):
            candidates.append((f"level {n} sum", ctilde_level_form(c, epsilon, n, j - n)))
        for label, value in candidates:
            if not _agree(matrix.c(j), value, exact):
                raise InternalInconsistency(
                    f"c~_{j}: matrix {matrix.c(j)} != {label} {value}")
    logger.debug("reparam c~ verified to depth %d", depth)
    return matrix


def _agree(a, b, exact: bool) -> bool:
    if exact and is_exact(b):
        return a == b
    return math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=1e-12)


def ctilde_first_level_form(c, epsilon: Scalar, depth: int) -> List[Scalar]:
    """Bodies of c~_{1+i} = sum_j C(i,j) eps^(i-j) (i-1)!/(j-1)! c_{1+j}, c~_1 = c_1."""
    c = _as_coef_vector(c)
    (epsilon,) = _lift(epsilon)
    out = [c.c(1)]
    for i in range(1, depth):
        total = epsilon * 0
        for j in range(1, i + 1):
            weight = factorial(i - 1) // factorial(j - 1)
            total += comb(i, j) * epsilon ** (i - j) * weight * c.c(1 + j)
        out.append(total)
    return out


def ctilde_level_form(c, epsilon: Scalar, n: int, i: int) -> Scalar:
    """Body of c~_{n+i} from the level-n double sum, n >= 2."""
    c = _as_coef_vector(c)
    (epsilon,) = _lift(epsilon)
    table = bnk_table(max(n, 2))
    total = epsilon * 0
    for k in range(1, n):
        for j in range(i + 1):
            ratio = factorial(n + k + i - 2) // factorial(n + k + j - 2)
            total += (table[n, k] * epsilon ** (n + i - j - k - 1) * c.c(k + 1 + j)
                      * comb(i, j) * ratio)
    return total


@dataclass(frozen=True)
class RestrictionCheck:
    first: bool
    second: bool
    third: bool

    @property
    def all(self) -> bool:
        return self.first and self.second and self.third


def restrictions_ok(x_tilde: Scalar, epsilon: Scalar, a: Scalar) -> RestrictionCheck:
    """Convergence conditions for the reparametrized expansion around a."""
    x_tilde, epsilon, a = _lift(x_tilde, epsilon, a)
    denominator = 1 + a * epsilon
    if denominator == 0:
        raise TransformSingular("restrictions undefined at a*eps = -1")
    return RestrictionCheck(
        abs((x_tilde - a) * epsilon / denominator) < 1,
        abs(a * epsilon / denominator) < 1,
        abs(x_tilde * epsilon) < 1,
    )


@dataclass(frozen=True)
class IVPPair:
    """The two solutions y^A (direct flow) and y^B (flow through L2) of one IVP."""

    ya: HierarchyState
    inner: HierarchyState
    epsilon: Scalar

    def yb_state(self) -> HierarchyState:
        return _apply_l2(self.epsilon, self.inner)

    def evaluate_a(self, x: Scalar) -> List[Scalar]:
        return self.ya.evaluate(x)[0]

    def evaluate_b(self, x: Scalar) -> List[Scalar]:
        x, epsilon = _lift(x, self.epsilon)
        denominator = 1 + epsilon * x
        if denominator == 0:
            raise TransformSingular(f"y^B singular at x = -1/eps = {x}")
        x_star = x / denominator
        bodies = [evaluate(level, x_star)[0] for level in self.inner.levels]
        image = group_matrix(x_star, epsilon, self.inner.depth).apply(
            CoefVector(tuple(bodies), self.inner.unit_exponent))
        if image.unit_exponent == 0:
            return list(image.entries)
        return image.values()

    def initial_values(self) -> Tuple[List[Scalar], List[Scalar]]:
        return self.evaluate_a(Fraction(0)), self.evaluate_b(Fraction(0))


def solve_ivp_pair(y0, epsilon: Scalar, depth: int, order: int) -> IVPPair:
    """y^A = exp(-xA) y0 and y^B = G(x*, eps) exp(-x* A) G(0, -eps) y0, x* = x/(1 + eps x)."""
    y0 = _as_coef_vector(y0)
    size = depth + order
    if len(y0) < size:
        raise DependencyConeViolation(f"initial vector needs {size} entries, got {len(y0)}")
    ya = flow_solution(y0, depth, order)
    seed = group_matrix(0, -epsilon, size)
    inner = flow_solution(seed.apply(y0.head(size)), depth, order)
    return IVPPair(ya, inner, epsilon)


def divergence_witness(c, x: Scalar, orders: Sequence[int] = (40, 80)) -> List[float]:
    """|level-1 partial sum| of the flow series at x for each order."""
    c = _as_coef_vector(c)
    sums = []
    for order in orders:
        level = flow_solution(c.head(order + 1), 1, order).level(1)
        value, _ = evaluate(level, x)
        sums.append(abs(float(value)))
    return sums


class Table1Row(str, Enum):
    REPARAMETRIZED_CONSTANT = "reparametrized_constant"
    FACTORIAL = "factorial"
    CONSTANT = "constant"
    FACTORIAL_SQUARED = "factorial_squared"


INNER_FAMILIES = ("constant", "power", "inverse_factorial")


def table1_seed(row: Table1Row, epsilon: Scalar, length: int, alpha: Scalar = 1,
                family: str = "constant", power: int = 1) -> CoefVector:
    """Initial vector y_(0) of a convergence-table row, exact rationals."""
    row = Table1Row(row)
    alpha = to_exact(alpha)
    if row is Table1Row.REPARAMETRIZED_CONSTANT:
        if family not in INNER_FAMILIES:
            raise ValueError(f"unknown inner family: {family}")
        if family == "power":
            inner = CoefVector.from_function(lambda j: alpha * j ** power, length)
        elif family == "inverse_factorial":
            inner = CoefVector.from_function(lambda j: alpha / factorial(j), length)
        else:
            inner = CoefVector((alpha,) * length)
        return group_matrix(0, to_exact(epsilon), length).apply(inner)
    if row is Table1Row.FACTORIAL:
        return CoefVector.from_function(lambda i: alpha * factorial(i), length)
    if row is Table1Row.CONSTANT:
        return CoefVector((alpha,) * length)
    return CoefVector.from_function(lambda i: alpha * factorial(i) ** 2, length)


@dataclass(frozen=True)
class ConvergenceDomain:
    estimate: RadiusEstimate
    through_moebius: bool

    def describe(self) -> str:
        variable = "x/(1+eps*x)" if self.through_moebius else "x"
        if self.estimate.is_zero:
            return "x = 0"
        if self.estimate.is_infinite:
            return "R minus {-1/eps}" if self.through_moebius else "R"
        return f"|{variable}| < {self.estimate.radius:.6g}"


@dataclass(frozen=True)
class DomainReport:
    row: Table1Row
    epsilon: Scalar
    ya: ConvergenceDomain
    yb: ConvergenceDomain


def convergence_domains(row: Table1Row, epsilon: Scalar = DEFAULT_EPSILON, alpha: Scalar = 1,
                        order: int = TABLE1_ORDER, family: str = "constant") -> DomainReport:
    """Radius estimates of the level-1 streams of y^A and of y^B's inner flow."""
    if not is_exact(epsilon):
        epsilon = to_exact(epsilon)
    length = order + 1
    seed = table1_seed(row, epsilon, length, alpha, family)
    inner = group_matrix(0, -epsilon, length).apply(seed)
    ya = flow_solution(seed, 1, order).level(1)
    yb_inner = flow_solution(inner, 1, order).level(1)
    report = DomainReport(
        Table1Row(row), epsilon,
        ConvergenceDomain(radius_estimate(ya.coeffs, RADIUS_METHOD_TAIL), False),
        ConvergenceDomain(radius_estimate(yb_inner.coeffs, RADIUS_METHOD_TAIL), True),
    )
    logger.info("%s: y^A %s, y^B %s", report.row.value, report.ya.describe(), report.yb.describe())
    return report


@dataclass(frozen=True)
class ICInfinitesimals:
    """xi(x, y1), eta1(x, y1) vanishing to all orders at the initial point."""

    f0: Callable[[float, float], float]
    g0: Callable[[float, float], float]
    gamma_f: float
    gamma_g: float
    x0: float
    y0_1: float

    def xi(self, x: float, y1: float) -> float:
        return _flat(self.f0(x, y1), self.gamma_f, x - self.x0)

    def eta1(self, x: float, y1: float) -> float:
        return _flat(self.g0(x, y1), self.gamma_g, y1 - self.y0_1)

    def __call__(self, x: float, y1: float) -> Tuple[float, float]:
        return self.xi(x, y1), self.eta1(x, y1)


def _flat(prefactor: float, gamma: float, offset: float) -> float:
    if offset == 0:
        return 0.0
    return prefactor * math.exp(-gamma * gamma / (offset * offset))


def ic_compatible_infinitesimals(f0, g0, gamma_f: float, gamma_g: float, x0: float,
                                 y0_1: float) -> ICInfinitesimals:
    if gamma_f <= 0 or gamma_g <= 0:
        raise DomainError("flatness widths must be positive")
    return ICInfinitesimals(f0, g0, float(gamma_f), float(gamma_g), float(x0), float(y0_1))
