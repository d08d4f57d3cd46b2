import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from constants import (
    BISECTION_TOLERANCE,
    DEFAULT_DELTA,
    DEFAULT_GAMMA,
    INTERVAL_SCAN_MAX,
    INTERVAL_SCAN_MIN,
    INTERVAL_SCAN_POINTS,
)
from errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BumpSpec:
    """b(x) = exp(-gamma / x^2), flat at b(0) = 0."""

    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"bump width must be positive, got {self.gamma}")


@lru_cache(maxsize=None)
def bump_polynomials(gamma: float, order: int) -> Tuple[Tuple[float, ...], ...]:
    """Coefficients of R_0..R_order in u = 1/x, R_{m+1} = -u^2 R_m' + 2 gamma u^3 R_m."""
    polys = [(1,)]
    for _ in range(order):
        current = polys[-1]
        nxt = [0] * (len(current) + 3)
        for j, c in enumerate(current):
            if j:
                nxt[j + 1] -= j * c
            nxt[j + 3] += 2 * gamma * c
        while len(nxt) > 1 and nxt[-1] == 0:
            nxt.pop()
        polys.append(tuple(nxt))
    return tuple(polys)


def bump_derivative(spec: BumpSpec, order: int, x: float) -> float:
    """d^m/dx^m exp(-gamma/x^2) = R_m(1/x) exp(-gamma/x^2); zero at x = 0."""
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    if x == 0:
        return 0.0
    u = 1.0 / x
    log_u = math.log(abs(u))
    damping = spec.gamma * u * u
    terms = []
    for j, c in enumerate(bump_polynomials(spec.gamma, order)[order]):
        if c == 0:
            continue
        exponent = math.log(abs(c)) + j * log_u - damping
        if exponent < -745:
            continue
        sign = math.copysign(1.0, c) * (-1.0 if u < 0 and j % 2 else 1.0)
        terms.append(sign * math.exp(exponent))
    return math.fsum(terms)


def reference_solution(level: int, x: float) -> float:
    """y^I_n(x) = exp(-x), the flow of the all-ones initial vector."""
    if level < 1:
        raise ValueError("levels start at 1")
    return math.exp(-x)


def alt_solution(spec: BumpSpec, level: int, x: float) -> float:
    """y^II_n(x) = exp(-x) + (-1)^(n-1) b^(n-1)(x)."""
    if level < 1:
        raise ValueError("levels start at 1")
    sign = -1.0 if (level - 1) % 2 else 1.0
    return math.exp(-x) + sign * bump_derivative(spec, level - 1, x)


def _alt_slope(spec: BumpSpec, level: int, x: float) -> float:
    sign = -1.0 if (level - 1) % 2 else 1.0
    return -math.exp(-x) + sign * bump_derivative(spec, level, x)


@dataclass(frozen=True)
class UniquenessInterval:
    """Maximal interval (left, right) around 0 where |y^II_n - y^I_n| < delta."""

    level: int
    gamma: float
    delta: float
    left: float
    right: float

    @property
    def length(self) -> float:
        return self.right - self.left

    def contains(self, x: float) -> bool:
        return self.left < x < self.right


def _edge(spec: BumpSpec, level: int, delta: float, direction: float) -> float:
    def excess(t: float) -> float:
        return abs(bump_derivative(spec, level - 1, direction * t)) - delta

    scan = np.geomspace(INTERVAL_SCAN_MIN, INTERVAL_SCAN_MAX, INTERVAL_SCAN_POINTS)
    previous = 0.0
    for t in scan:
        if excess(t) >= 0:
            return bisect(excess, previous, t, xtol=BISECTION_TOLERANCE)
        previous = t
    raise DomainError(f"|b^({level - 1})| stays below delta = {delta} out to |x| = {INTERVAL_SCAN_MAX}")


def uniqueness_bounds(spec: BumpSpec, level: int, delta: float = DEFAULT_DELTA) -> UniquenessInterval:
    if delta <= 0:
        raise DomainError("agreement threshold must be positive")
    if level < 1:
        raise ValueError("levels start at 1")
    right = _edge(spec, level, delta, 1.0)
    left = -_edge(spec, level, delta, -1.0)
    logger.debug("level %d gamma %g: interval (%g, %g)", level, spec.gamma, left, right)
    return UniquenessInterval(level, spec.gamma, delta, left, right)


def uniqueness_interval(spec: BumpSpec, level: int, delta: float = DEFAULT_DELTA) -> float:
    """|I_n|, located by bisection on each side of 0."""
    return uniqueness_bounds(spec, level, delta).length


@dataclass(frozen=True)
class PairResidualReport:
    """Per-level max |y'_n + y_{n+1}| over a grid for both global solutions."""

    reference: Tuple[float, ...]
    alternative: Tuple[float, ...]

    @property
    def max(self) -> float:
        return max(self.reference + self.alternative, default=0.0)


def verify_global_pair(spec: BumpSpec, depth: int, grid: Sequence[float],
                       perturbation: Optional[Dict[int, float]] = None) -> PairResidualReport:
    """Residuals from exact derivative formulas; ``perturbation`` shifts y^II levels."""
    if depth < 2:
        raise ValueError("the pair check needs depth >= 2")
    perturbation = perturbation or {}
    reference, alternative = [], []
    for n in range(1, depth):
        worst_ref, worst_alt = 0.0, 0.0
        for x in grid:
            worst_ref = max(worst_ref, abs(-math.exp(-x) + reference_solution(n + 1, x)))
            value = _alt_slope(spec, n, x) + alt_solution(spec, n + 1, x) + perturbation.get(n + 1, 0.0)
            worst_alt = max(worst_alt, abs(value))
        reference.append(worst_ref)
        alternative.append(worst_alt)
    return PairResidualReport(tuple(reference), tuple(alternative))


@dataclass(frozen=True)
class FigureRow:
    level: int
    gamma: float
    x: float
    y_reference: float
    y_alternative: float
    in_interval: bool


def figure_rows(spec: BumpSpec, levels: Sequence[int], xs: Sequence[float],
                delta: float = DEFAULT_DELTA) -> Tuple[List[FigureRow], List[UniquenessInterval]]:
    """Sampled curves of both solutions plus the interval of each level."""
    rows, intervals = [], []
    for n in levels:
        interval = uniqueness_bounds(spec, n, delta)
        intervals.append(interval)
        for x in xs:
            rows.append(FigureRow(n, spec.gamma, float(x), reference_solution(n, x),
                                  alt_solution(spec, n, x), interval.contains(x)))
    return rows, intervals
