import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Optional, Union

import numpy as np

Scalar = Union[Fraction, int, float]

EXACT = "exact"
FLOAT = "float"
BACKENDS = (EXACT, FLOAT)


def is_exact(value) -> bool:
    """True for int/Fraction values (bools excluded)."""
    return isinstance(value, Rational) and not isinstance(value, bool)


def all_exact(values: Iterable) -> bool:
    return all(is_exact(v) for v in values)


def to_exact(value) -> Fraction:
    """Convert to Fraction; floats convert to their exact binary value."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    return Fraction(value)


def to_float(value) -> float:
    return float(value)


def coerce(value, backend: str) -> Scalar:
    """Convert a value to the representation of the given backend."""
    if backend == EXACT:
        return to_exact(value)
    if backend == FLOAT:
        return float(value)
    raise ValueError(f"unknown backend: {backend}")


def log_abs(value) -> float:
    """log|value| without overflowing on large rationals; -inf for zero."""
    if value == 0:
        return -math.inf
    if isinstance(value, Fraction):
        return math.log(abs(value.numerator)) - math.log(value.denominator)
    if isinstance(value, int):
        return math.log(abs(value))
    return math.log(abs(float(value)))


def magnitude(value) -> float:
    """|value| as a float, saturating to inf instead of raising."""
    try:
        return abs(float(value))
    except OverflowError:
        return math.inf


def exact_root(value: Fraction, q: int) -> Optional[Fraction]:
    """Exact q-th root of a nonnegative rational, or None if irrational."""
    if value < 0:
        return None
    num = _integer_root(value.numerator, q)
    den = _integer_root(value.denominator, q)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _integer_root(n: int, q: int) -> Optional[int]:
    if q == 2:
        r = math.isqrt(n)
        return r if r * r == n else None
    try:
        guess = round(n ** (1.0 / q))
    except OverflowError:
        return None
    # float guess may be off by one
    for candidate in (guess - 1, guess, guess + 1):
        if candidate >= 0 and candidate ** q == n:
            return candidate
    return None


def exact_power(base, alpha) -> Optional[Fraction]:
    """base**alpha as an exact rational when representable, else None."""
    if not (is_exact(base) and is_exact(alpha)):
        return None
    base = to_exact(base)
    alpha = to_exact(alpha)
    if alpha.denominator == 1:
        if base == 0 and alpha < 0:
            return None
        return base ** int(alpha)
    root = exact_root(base, alpha.denominator)
    if root is None:
        return None
    if root == 0 and alpha < 0:
        return None
    return root ** alpha.numerator


def format_scalar(value) -> str:
    """Fixed textual form: rationals as p/q, floats with 17 significant digits."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if is_exact(value):
        value = to_exact(value)
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"
