import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from constants import RADIUS_METHOD_ROOT, TAIL_TOLERANCE
from engine.radius import radius_estimate
from errors import (
    BasePointMismatch,
    DegenerateSeries,
    DomainError,
    MissingConstants,
    OutsideRadius,
)
from utils.scalars import (
    Scalar,
    all_exact,
    exact_power,
    format_scalar,
    is_exact,
    log_abs,
    magnitude,
    to_exact,
)

logger = logging.getLogger(__name__)

ADD = "add"
MUL = "mul"
DIFFERENTIATE = "differentiate"
ANTIDIFFERENTIATE = "antidifferentiate"


def _divide(value, n: int):
    """value / n, staying rational for exact values."""
    if is_exact(value):
        return to_exact(value) / n
    return value / n


def _one_like(value):
    return Fraction(1) if is_exact(value) else 1.0


def _zero_like(value):
    return Fraction(0) if is_exact(value) else 0.0


@dataclass(frozen=True)
class TruncatedSeries:
    """Coefficients c_0..c_K of a power series in (x - base_point).

    ``valid_order`` is the highest index guaranteed correct by the producing
    operation. ``terminating`` records that every coefficient beyond K is known
    to vanish (polynomials), ``approximate`` that coefficients were computed
    from a truncated tail.
    """

    coeffs: Tuple
    base_point: Scalar = 0
    valid_order: Optional[int] = None
    approximate: bool = field(default=False, compare=False)
    terminating: bool = field(default=False, compare=False)

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        if not coeffs:
            raise DegenerateSeries("a series needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)
        order = len(coeffs) - 1
        if self.valid_order is None:
            object.__setattr__(self, "valid_order", order)
        if not 0 <= self.valid_order <= order:
            raise DegenerateSeries(
                f"valid_order {self.valid_order} outside [0, {order}]")

    @classmethod
    def from_coefficients(cls, coeffs: Iterable, base_point: Scalar = 0,
                          valid_order: Optional[int] = None) -> "TruncatedSeries":
        return cls(tuple(coeffs), base_point, valid_order)

    @classmethod
    def constant(cls, value: Scalar, order: int, base_point: Scalar = 0) -> "TruncatedSeries":
        zero = _zero_like(value)
        return cls((value,) + (zero,) * order, base_point, terminating=True)

    @classmethod
    def zeros(cls, order: int, base_point: Scalar = 0, exact: bool = True) -> "TruncatedSeries":
        return cls.constant(Fraction(0) if exact else 0.0, order, base_point)

    @classmethod
    def polynomial(cls, coeffs: Sequence, order: int, base_point: Scalar = 0) -> "TruncatedSeries":
        """Polynomial given by coefficients in powers of x, expanded around base_point."""
        return polynomial_series(coeffs, base_point, order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_exact(self) -> bool:
        return all_exact(self.coeffs) and is_exact(self.base_point)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def __call__(self, x):
        return evaluate(self, x)[0]

    def __add__(self, other):
        return self.add(other)

    def __radd__(self, other):
        return self.add(other)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self.add(-other)

    def __rsub__(self, other):
        return (-self).add(other)

    def __mul__(self, other):
        return self.mul(other)

    def __rmul__(self, other):
        return self.mul(other)

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self.mul(other.reciprocal())
        if is_exact(other) and self.is_exact:
            return self.scale(Fraction(1) / to_exact(other))
        return self.scale(1.0 / other)

    def _check_base(self, other: "TruncatedSeries") -> None:
        if self.base_point != other.base_point:
            raise BasePointMismatch(
                f"base points differ: {self.base_point} vs {other.base_point}")

    def _replace(self, coeffs, valid_order=None, approximate=None, terminating=None,
                 base_point=None) -> "TruncatedSeries":
        coeffs = tuple(coeffs)
        order = len(coeffs) - 1
        valid = self.valid_order if valid_order is None else valid_order
        return TruncatedSeries(
            coeffs,
            self.base_point if base_point is None else base_point,
            min(valid, order),
            self.approximate if approximate is None else approximate,
            self.terminating if terminating is None else terminating,
        )

    def scale(self, factor: Scalar) -> "TruncatedSeries":
        return self._replace(c * factor for c in self.coeffs)

    def add(self, other) -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            coeffs = list(self.coeffs)
            coeffs[0] = coeffs[0] + other
            return self._replace(coeffs)
        self._check_base(other)
        order = min(self.order, other.order)
        coeffs = [a + b for a, b in zip(self.coeffs[:order + 1], other.coeffs[:order + 1])]
        return TruncatedSeries(
            tuple(coeffs),
            self.base_point,
            min(self.valid_order, other.valid_order, order),
            self.approximate or other.approximate,
            self.terminating and other.terminating
            and _tail_vanishes(self, order) and _tail_vanishes(other, order),
        )

    def mul(self, other) -> "TruncatedSeries":
        """Cauchy product truncated at the smaller order."""
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        self._check_base(other)
        order = min(self.order, other.order)
        a, b = self.coeffs[:order + 1], other.coeffs[:order + 1]
        if self.is_exact or other.is_exact:
            coeffs = [sum((a[i] * b[k - i] for i in range(k + 1)), _zero_like(a[0]))
                      for k in range(order + 1)]
        else:
            coeffs = np.convolve(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
            coeffs = coeffs[:order + 1].tolist()
        terminating = (self.terminating and other.terminating
                       and _degree(self) + _degree(other) <= order)
        return TruncatedSeries(
            tuple(coeffs),
            self.base_point,
            min(self.valid_order, other.valid_order, order),
            self.approximate or other.approximate,
            terminating,
        )

    def differentiate(self) -> "TruncatedSeries":
        if self.order == 0 or self.valid_order == 0:
            raise DegenerateSeries("differentiation leaves no valid coefficient")
        coeffs = [k * self.coeffs[k] for k in range(1, self.order + 1)]
        return self._replace(coeffs, valid_order=self.valid_order - 1)

    def antidifferentiate(self, constant: Scalar = 0) -> "TruncatedSeries":
        """Antiderivative with value ``constant`` at the base point; order stays K."""
        if self.is_exact and is_exact(constant):
            constant = to_exact(constant)
        coeffs = [constant] + [_divide(self.coeffs[k], k + 1) for k in range(self.order)]
        return self._replace(
            coeffs,
            valid_order=min(self.valid_order + 1, self.order),
            terminating=self.terminating and self.coeffs[-1] == 0,
        )

    def truncate(self, order: int) -> "TruncatedSeries":
        order = min(order, self.order)
        return self._replace(self.coeffs[:order + 1],
                             terminating=self.terminating and _tail_vanishes(self, order))

    def times_power(self, m: int) -> "TruncatedSeries":
        """Multiply by (x - base)^m, keeping order K."""
        zero = _zero_like(self.coeffs[0])
        coeffs = ((zero,) * m + self.coeffs)[:self.order + 1]
        return self._replace(coeffs, valid_order=min(self.valid_order + m, self.order),
                             terminating=self.terminating and _degree(self) + m <= self.order)

    def reciprocal(self) -> "TruncatedSeries":
        head = self.coeffs[0]
        if head == 0:
            raise DegenerateSeries("reciprocal of a series with zero constant term")
        inverse = _one_like(head) / head if self.is_exact else 1.0 / head
        result = [inverse]
        for n in range(1, self.order + 1):
            total = sum((self.coeffs[i] * result[n - i] for i in range(1, n + 1)),
                        _zero_like(head))
            result.append(-total * inverse)
        return self._replace(result, terminating=self.order == 0)

    def power(self, alpha: Scalar) -> "TruncatedSeries":
        """s**alpha via the J.C.P. Miller recurrence."""
        head = self.coeffs[0]
        if head == 0:
            if is_exact(alpha) and to_exact(alpha).denominator == 1 and alpha >= 0:
                result = TruncatedSeries.constant(_one_like(head), self.order, self.base_point)
                for _ in range(int(alpha)):
                    result = result.mul(self)
                return result
            raise DegenerateSeries("power of a series with zero constant term")
        lead = exact_power(head, alpha) if self.is_exact else None
        if lead is None:
            if head < 0 and not float(alpha).is_integer():
                raise DomainError(f"non-integer power of negative constant term {head}")
            lead = float(head) ** float(alpha)
            coeffs, alpha = [float(c) for c in self.coeffs], float(alpha)
        else:
            coeffs, alpha = [to_exact(c) for c in self.coeffs], to_exact(alpha)
        head = coeffs[0]
        result = [lead]
        for k in range(1, self.order + 1):
            total = sum(((alpha + 1) * j - k) * coeffs[j] * result[k - j] for j in range(1, k + 1))
            result.append(total / (k * head))
        return self._replace(result, terminating=False)

    def exp(self) -> "TruncatedSeries":
        head = self.coeffs[0]
        if self.is_exact and head == 0:
            coeffs, lead = [to_exact(c) for c in self.coeffs], Fraction(1)
        else:
            coeffs, lead = [float(c) for c in self.coeffs], math.exp(float(head))
        result = [lead]
        for k in range(1, self.order + 1):
            total = sum(j * coeffs[j] * result[k - j] for j in range(1, k + 1))
            result.append(_divide(total, k))
        return self._replace(result, terminating=False)

    def to_float(self) -> "TruncatedSeries":
        return TruncatedSeries(tuple(float(c) for c in self.coeffs), float(self.base_point),
                               self.valid_order, self.approximate, self.terminating)

    def as_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])

    def same_coefficients(self, other: "TruncatedSeries", order: Optional[int] = None) -> bool:
        """Exact coefficientwise equality up to ``order`` (default: common valid order)."""
        if self.base_point != other.base_point:
            return False
        if order is None:
            order = min(self.valid_order, other.valid_order)
        return all(self.coeffs[k] == other.coeffs[k] for k in range(order + 1))

    def to_dict(self) -> dict:
        return {
            "base": format_scalar(self.base_point),
            "coeffs": [format_scalar(c) for c in self.coeffs],
            "valid_order": self.valid_order,
        }

    def compose_moebius(self, epsilon: Scalar) -> "TruncatedSeries":
        return compose_moebius(self, epsilon)

    def rebase(self, new_base: Scalar, certify: bool = False) -> "TruncatedSeries":
        return rebase(self, new_base, certify)


def _degree(s: TruncatedSeries) -> int:
    for k in range(s.order, -1, -1):
        if s.coeffs[k] != 0:
            return k
    return 0


def _tail_vanishes(s: TruncatedSeries, order: int) -> bool:
    return all(c == 0 for c in s.coeffs[order + 1:])


def series_arithmetic(op: str, lhs: TruncatedSeries, rhs=None) -> TruncatedSeries:
    """Dispatch add/mul/differentiate/antidifferentiate."""
    if op == ADD:
        return lhs.add(rhs)
    if op == MUL:
        return lhs.mul(rhs)
    if op == DIFFERENTIATE:
        return lhs.differentiate()
    if op == ANTIDIFFERENTIATE:
        if rhs is None:
            raise MissingConstants("antidifferentiate needs an integration constant")
        return lhs.antidifferentiate(rhs)
    raise ValueError(f"unknown series operation: {op}")


def polynomial_series(coeffs: Sequence, base_point: Scalar, order: int) -> TruncatedSeries:
    """Expand the polynomial sum(coeffs[i] x^i) around base_point, truncated at order."""
    coeffs = list(coeffs) or [0]
    exact = all_exact(coeffs) and is_exact(base_point)
    if exact:
        coeffs = [to_exact(c) for c in coeffs]
        base_point = to_exact(base_point)
    shifted = _taylor_shift(coeffs, base_point)
    degree = len(shifted) - 1
    zero = Fraction(0) if exact else 0.0
    padded = (shifted + [zero] * (order + 1))[:order + 1]
    return TruncatedSeries(tuple(padded), base_point, order,
                           terminating=degree <= order or all(c == 0 for c in shifted[order + 1:]))


def _taylor_shift(coeffs: Sequence, shift: Scalar) -> list:
    """Coefficients b_j = sum_k a_k C(k, j) shift^(k-j)."""
    if shift == 0:
        return list(coeffs)
    n = len(coeffs)
    powers = [_one_like(shift)]
    for _ in range(n):
        powers.append(powers[-1] * shift)
    return [sum((coeffs[k] * comb(k, j) * powers[k - j] for k in range(j, n)), _zero_like(shift))
            for j in range(n)]


def compose_moebius(s: TruncatedSeries, epsilon: Scalar) -> TruncatedSeries:
    """Substitute x = x̃/(1 + epsilon x̃) into a series based at 0."""
    if s.base_point != 0:
        raise BasePointMismatch("compose_moebius needs a series based at 0")
    if s.order < 1:
        raise DegenerateSeries("compose_moebius needs order >= 1")
    if epsilon == 0:
        return s
    if s.is_exact and is_exact(epsilon):
        epsilon = to_exact(epsilon)
    neg = [_one_like(epsilon)]
    for _ in range(s.order):
        neg.append(neg[-1] * -epsilon)
    # x^k (1 + eps x)^(-k) = sum_m C(k+m-1, m) (-eps)^m x^(k+m)
    coeffs = [s.coeffs[0]]
    for j in range(1, s.order + 1):
        coeffs.append(sum((s.coeffs[k] * comb(j - 1, j - k) * neg[j - k] for k in range(1, j + 1)),
                          _zero_like(epsilon)))
    return s._replace(coeffs, terminating=False)


def rebase(s: TruncatedSeries, new_base: Scalar, certify: bool = False) -> TruncatedSeries:
    """Taylor shift to a new expansion point."""
    shift = new_base - s.base_point
    if shift == 0:
        return s
    if certify:
        estimate = radius_estimate(s.coeffs, RADIUS_METHOD_ROOT)
        if not estimate.contains(magnitude(shift)):
            raise OutsideRadius(
                f"rebase distance {magnitude(shift):g} outside estimated radius {estimate.describe()}")
    elif not s.terminating:
        logger.debug("Uncertified rebase of a non-polynomial series by %s", shift)
    if s.is_exact and is_exact(shift):
        shift = to_exact(shift)
    coeffs = _taylor_shift(list(s.coeffs), shift)
    return TruncatedSeries(tuple(coeffs), new_base, s.valid_order,
                           approximate=s.approximate or not s.terminating,
                           terminating=s.terminating)


def evaluate(s: TruncatedSeries, x: Scalar, tolerance: float = TAIL_TOLERANCE):
    """Horner evaluation; returns (value, tail_flag).

    Exact series are evaluated exactly; a float argument then yields a float.
    """
    float_result = not is_exact(x)
    if s.is_exact:
        t = to_exact(x) - to_exact(s.base_point)
    else:
        t = x - s.base_point
    value = _zero_like(t)
    for c in reversed(s.coeffs):
        value = value * t + c
    flagged = False
    if s.order >= 1 and t != 0:
        last = s.coeffs[-1] * t ** s.order
        if last != 0:
            flagged = value == 0 or log_abs(last) - log_abs(value) > math.log(tolerance)
    if float_result and s.is_exact:
        value = float(value)
    return value, flagged
