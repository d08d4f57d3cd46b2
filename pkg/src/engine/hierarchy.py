import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from engine.series import TruncatedSeries, evaluate, polynomial_series
from errors import (
    BasePointMismatch,
    DependencyConeViolation,
    PoleAtBasePoint,
    PoleEvaluation,
)
from utils.scalars import EXACT, FLOAT, Scalar, format_scalar, is_exact, magnitude

logger = logging.getLogger(__name__)

Y_FORM = "y"
Z_FORM = "z"


def _poly_eval(coeffs: Sequence, x: Scalar) -> Scalar:
    value = 0
    for c in reversed(coeffs):
        value = value * x + c
    return value


def _poly_mul(a: Sequence, b: Sequence) -> Tuple:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return tuple(out)


@dataclass(frozen=True)
class RationalFunction:
    """num(x)/den(x) with coefficient tuples in increasing powers of x."""

    num: Tuple = (0,)
    den: Tuple = (1,)

    def __post_init__(self):
        object.__setattr__(self, "num", tuple(self.num) or (0,))
        object.__setattr__(self, "den", tuple(self.den))
        if not self.den or all(c == 0 for c in self.den):
            raise ValueError("denominator is identically zero")

    @classmethod
    def constant(cls, value: Scalar) -> "RationalFunction":
        return cls((value,))

    @classmethod
    def monomial(cls, power: int, coeff: Scalar = 1) -> "RationalFunction":
        """coeff * x^power, negative powers allowed."""
        if power >= 0:
            return cls((0,) * power + (coeff,))
        return cls((coeff,), (0,) * (-power) + (1,))

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.num)

    def has_pole_at(self, x: Scalar) -> bool:
        return _poly_eval(self.den, x) == 0

    def evaluate(self, x: Scalar) -> Scalar:
        den = _poly_eval(self.den, x)
        if den == 0:
            raise PoleEvaluation(f"pole at x = {x}")
        num = _poly_eval(self.num, x)
        if is_exact(num) and is_exact(den):
            return Fraction(num) / Fraction(den)
        return num / den

    def series_at(self, base_point: Scalar, order: int) -> TruncatedSeries:
        if self.has_pole_at(base_point):
            raise PoleAtBasePoint(f"pole at base point {base_point}")
        num = polynomial_series(self.num, base_point, order)
        if self.den == (1,):
            return num
        return num.mul(polynomial_series(self.den, base_point, order).reciprocal())


@dataclass(frozen=True)
class GeneralRiccatiHierarchySpec:
    """y'_n = q0 + q1 y_n + q2 y_{n+1}^2 + q3 y_{n+1}."""

    q0: RationalFunction
    q1: RationalFunction
    q2: RationalFunction
    q3: RationalFunction
    name: str = "general"

    @classmethod
    def linear(cls) -> "GeneralRiccatiHierarchySpec":
        zero = RationalFunction.constant(0)
        return cls(zero, zero, zero, RationalFunction.constant(-1), name="linear")

    @classmethod
    def nonlinear(cls) -> "GeneralRiccatiHierarchySpec":
        zero = RationalFunction.constant(0)
        return cls(zero, RationalFunction.monomial(-1), RationalFunction.monomial(-3), zero,
                   name="nonlinear")

    @property
    def coefficients(self) -> Tuple[RationalFunction, ...]:
        return self.q0, self.q1, self.q2, self.q3

    @property
    def is_homogeneous_linear(self) -> bool:
        return self.q0.is_zero and self.q2.is_zero

    def has_pole_at(self, x: Scalar) -> bool:
        return any(not q.is_zero and q.has_pole_at(x) for q in self.coefficients)

    def cleared(self) -> Tuple[Tuple, Tuple[Tuple, ...]]:
        """Common denominator D and the polynomials D*q_i."""
        active = [q for q in self.coefficients if not q.is_zero]
        denominator = (1,)
        for q in active:
            denominator = _poly_mul(denominator, q.den)
        numerators = []
        for i, q in enumerate(self.coefficients):
            if q.is_zero:
                numerators.append((0,))
                continue
            poly = q.num
            for other in active:
                if other is not q:
                    poly = _poly_mul(poly, other.den)
            numerators.append(poly)
        return denominator, tuple(numerators)


@dataclass(frozen=True)
class HierarchyState:
    """Truncated levels y_1..y_N sharing one base point.

    ``form`` is ``z`` when levels hold z_n = y_n / x^2. ``unit_exponent`` tags
    a common factor exp(unit_exponent) kept out of the rational coefficients.
    """

    levels: Tuple[TruncatedSeries, ...]
    form: str = Y_FORM
    unit_exponent: Scalar = 0

    def __post_init__(self):
        levels = tuple(self.levels)
        if not levels:
            raise DependencyConeViolation("a state needs at least one level")
        base = levels[0].base_point
        for n, level in enumerate(levels, start=1):
            if level.base_point != base:
                raise BasePointMismatch(f"level {n} based at {level.base_point}, expected {base}")
        if self.form not in (Y_FORM, Z_FORM):
            raise ValueError(f"unknown state form: {self.form}")
        object.__setattr__(self, "levels", levels)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def base_point(self) -> Scalar:
        return self.levels[0].base_point

    @property
    def backend(self) -> str:
        return EXACT if all(level.is_exact for level in self.levels) else FLOAT

    @property
    def unit_factor(self) -> float:
        return math.exp(float(self.unit_exponent))

    def level(self, n: int) -> TruncatedSeries:
        """Level n, counted from 1."""
        return self.levels[n - 1]

    def validity_map(self) -> Dict[int, int]:
        return {n: level.valid_order for n, level in enumerate(self.levels, start=1)}

    def materialized(self) -> "HierarchyState":
        """Fold the tagged unit into the coefficients (float backend)."""
        if self.unit_exponent == 0:
            return self
        factor = self.unit_factor
        levels = tuple(level.to_float().scale(factor) for level in self.levels)
        return HierarchyState(levels, self.form)

    def as_y_form(self) -> "HierarchyState":
        if self.form == Y_FORM:
            return self
        order = max(level.order for level in self.levels)
        square = polynomial_series((0, 0, 1), self.base_point, order)
        levels = tuple(square.truncate(level.order).mul(level) for level in self.levels)
        return HierarchyState(levels, Y_FORM, self.unit_exponent)

    def evaluate(self, x: Scalar) -> Tuple[List[Scalar], List[bool]]:
        """Level values at x (y form, unit applied) and tail flags."""
        values, flags = [], []
        for level in self.levels:
            value, flag = evaluate(level, x)
            if self.form == Z_FORM:
                value = value * x * x
            if self.unit_exponent != 0:
                value = float(value) * self.unit_factor
            values.append(value)
            flags.append(flag)
        return values, flags

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "unit_exponent": format_scalar(self.unit_exponent),
            "levels": [level.to_dict() for level in self.levels],
        }


@dataclass(frozen=True)
class ResidualReport:
    per_level_max: Tuple[float, ...]
    exact_zero: bool
    backend: str = EXACT

    @property
    def max(self) -> float:
        return max(self.per_level_max, default=0.0)

    def to_dict(self) -> dict:
        return {"levels": list(self.per_level_max), "exact_zero": self.exact_zero}


def residual(spec: GeneralRiccatiHierarchySpec, state: HierarchyState) -> ResidualReport:
    """Per-level residual y'_n - q0 - q1 y_n - q2 y_{n+1}^2 - q3 y_{n+1} as series.

    z-form states are checked in the denominator-cleared equation, which is
    regular at poles of the q_i.
    """
    if state.depth < 2:
        raise DependencyConeViolation("residual needs at least two levels")
    scale = 1.0
    if state.unit_exponent != 0:
        if spec.is_homogeneous_linear:
            scale = state.unit_factor
            state = HierarchyState(state.levels, state.form)
        else:
            state = state.materialized()
    cleared = state.form == Z_FORM
    if cleared:
        state = state.as_y_form()
    elif spec.has_pole_at(state.base_point):
        raise PoleAtBasePoint(
            f"coefficient pole at base point {state.base_point}; pass a z-form state")

    order = max(level.order for level in state.levels)
    base = state.base_point
    if cleared:
        denominator, numerators = spec.cleared()
        weight = polynomial_series(denominator, base, order)
        terms = [None if q.is_zero else polynomial_series(p, base, order)
                 for q, p in zip(spec.coefficients, numerators)]
    else:
        weight = None
        terms = [None if q.is_zero else q.series_at(base, order) for q in spec.coefficients]

    per_level, exact_zero = [], state.backend == EXACT
    for n in range(1, state.depth):
        y, y_next = state.level(n), state.level(n + 1)
        bound = min(y.valid_order - 1, y_next.valid_order)
        if bound < 0:
            per_level.append(0.0)
            continue
        value = y.differentiate()
        if weight is not None:
            value = weight.truncate(value.order).mul(value)
        q0, q1, q2, q3 = terms
        if q0 is not None:
            value = value - q0.truncate(value.order)
        if q1 is not None:
            value = value - q1.mul(y)
        if q2 is not None:
            value = value - q2.mul(y_next.mul(y_next))
        if q3 is not None:
            value = value - q3.mul(y_next)
        coeffs = value.coeffs[:bound + 1]
        per_level.append(max(magnitude(c) for c in coeffs) * scale)
        exact_zero = exact_zero and all(c == 0 for c in coeffs)
    logger.debug("residual %s depth=%d max=%s", spec.name, state.depth, per_level)
    return ResidualReport(tuple(per_level), exact_zero, state.backend)


class Producer(str, Enum):
    FLOW = "flow"
    GENERATE_FROM_FREE = "generate_from_free"
    LAMBDA = "lambda"
    TRANSFORM = "transform"


def truncate_guarantee(depth: int, order: Optional[int], producer: Producer,
                       constants: Optional[int] = None) -> Dict[int, int]:
    """Guaranteed valid order per level for a producing operation.

    Flow and lambda producers consume constants with index n + k, so level n
    is valid to (constants - n), capped at ``order`` when given.
    """
    if depth < 1 or (order is not None and order < 1):
        raise ValueError("depth and order must be positive")
    producer = Producer(producer)
    if producer in (Producer.FLOW, Producer.LAMBDA):
        if constants is None:
            if order is None:
                raise DependencyConeViolation("flow guarantee needs the constant count")
            constants = depth + order
        guarantee = {}
        for n in range(1, depth + 1):
            valid = constants - n
            if order is not None:
                valid = min(valid, order)
            if valid < 0:
                raise DependencyConeViolation(
                    f"{constants} constants cannot seed level {n}")
            guarantee[n] = valid
        return guarantee
    if order is None:
        raise ValueError(f"{producer.value} guarantee needs an order")
    return {n: order for n in range(1, depth + 1)}
