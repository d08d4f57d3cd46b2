import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from constants import (
    DEFAULT_TMAX,
    MOMENT_SERIES_ORDER,
    MOMENT_STEP_DIVISOR,
    QUADRATURE_BOUND,
    RADIUS_METHOD_TAIL,
)
from engine.radius import RadiusEstimate, radius_estimate
from engine.series import TruncatedSeries, polynomial_series
from errors import DependencyConeViolation, DomainError, WrongDirection
from systems.uniqueness_lab import BumpSpec, bump_derivative
from utils.scalars import Scalar, all_exact, is_exact, magnitude, to_exact

logger = logging.getLogger(__name__)

BACKWARD = "backward"
FORWARD = "forward"


@dataclass(frozen=True)
class MomentSystemSpec:
    """du_n/dt = a n(n-1) u_{n-2} - b n u_n + c u_{n+2}."""

    a: Scalar = 1
    b: Scalar = 0
    c: Scalar = 0

    @property
    def direction(self) -> str:
        return BACKWARD if self.c == 0 else FORWARD


@dataclass(frozen=True)
class GaussianSpec:
    mean: Scalar = 1
    variance: Scalar = Fraction(1, 2)
    weight: Scalar = 1

    def __post_init__(self):
        if not self.variance > 0:
            raise DomainError(f"variance must be positive, got {self.variance}")

    def density(self, x: float) -> float:
        variance = float(self.variance)
        return (float(self.weight) / math.sqrt(2 * math.pi * variance)
                * math.exp(-(x - float(self.mean)) ** 2 / (2 * variance)))

    def evolved(self, t: Scalar) -> "GaussianSpec":
        """Heat flow u_t = u_xx spreads the variance by 2t."""
        return GaussianSpec(self.mean, self.variance + 2 * t, self.weight)


def gaussian_moments(spec: GaussianSpec, n_max: int) -> List[Scalar]:
    """m_n = mean m_{n-1} + (n-1) variance m_{n-2}, m_0 = weight."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    values = [spec.mean, spec.variance, spec.weight]
    if all_exact(values):
        mean, variance, weight = (to_exact(v) for v in values)
    else:
        mean, variance, weight = (float(v) for v in values)
    moments = [weight]
    if n_max >= 1:
        moments.append(mean * weight)
    for n in range(2, n_max + 1):
        moments.append(mean * moments[n - 1] + (n - 1) * variance * moments[n - 2])
    return moments


def _require_heat_case(spec: MomentSystemSpec) -> None:
    if spec.c != 0:
        raise WrongDirection("integration-constant solution needs a backward system (c = 0)")
    if spec.a != 1 or spec.b != 0:
        raise ValueError("closed backward solution covers a = 1, b = 0")


def backward_polynomials(c_seed: Sequence[Scalar], n_max: int,
                         spec: MomentSystemSpec = MomentSystemSpec()) -> List[Tuple]:
    """u_n(t) = sum_k n! / ((n-2k)! k!) c_{n-2k} t^k as coefficient tuples in t."""
    _require_heat_case(spec)
    if len(c_seed) < n_max + 1:
        raise DependencyConeViolation(f"need c_0..c_{n_max}, got {len(c_seed)} constants")
    exact = all_exact(c_seed[:n_max + 1])
    polys = []
    for n in range(n_max + 1):
        coeffs = []
        for k in range(n // 2 + 1):
            weight = Fraction(factorial(n), factorial(n - 2 * k) * factorial(k))
            value = c_seed[n - 2 * k]
            coeffs.append(weight * to_exact(value) if exact else float(weight) * float(value))
        polys.append(tuple(coeffs))
    return polys


def backward_solution(c_seed: Sequence[Scalar], t: Scalar, n_max: int,
                      spec: MomentSystemSpec = MomentSystemSpec()) -> List[Scalar]:
    if is_exact(t):
        t = to_exact(t)
    values = []
    for coeffs in backward_polynomials(c_seed, n_max, spec):
        value = t * 0
        for c in reversed(coeffs):
            value = value * t + c
        values.append(value)
    return values


@lru_cache(maxsize=None)
def _a1(i: int, n: int) -> int:
    if i == 0:
        return 1 if n >= -1 else 0
    upper = n - (2 * i - 1)
    return sum((2 * n - 2 * k) * (2 * n - 1 - 2 * k) * _a1(i - 1, n - 2 - k)
               for k in range(upper + 1))


@lru_cache(maxsize=None)
def _a2(j: int, m: int) -> int:
    if j == 1:
        return 1 if m >= 0 else 0
    upper = m - (2 * j - 3)
    return sum((2 * m - 2 * k) * (2 * m + 1 - 2 * k) * _a2(j - 1, m - 1 - k)
               for k in range(1, upper + 1))


@dataclass(frozen=True)
class ACoeffTable:
    """Coefficients of the solved form of the forward moment system.

    An upper summation limit below the lower one is an empty sum.
    """

    i_max: int
    n_max: int

    def a1(self, i: int, n: int) -> int:
        return _a1(i, n)

    def a2(self, j: int, m: int) -> int:
        return _a2(j, m)

    def to_dict(self) -> dict:
        return {
            "A1": {str(i): [_a1(i, n) for n in range(-1, self.n_max + 1)] for i in range(self.i_max + 1)},
            "A2": {str(j): [_a2(j, m) for m in range(self.n_max + 1)] for j in range(1, self.i_max + 2)},
        }


def forward_a_coefficients(i_max: int, n_max: int) -> ACoeffTable:
    table = ACoeffTable(i_max, n_max)
    # warm the caches bottom-up so deep rows do not recurse far
    for i in range(i_max + 1):
        for n in range(-1, n_max + 1):
            _a1(i, n)
            _a2(i + 1, n)
    return table


def _derivative(series: TruncatedSeries, times: int) -> TruncatedSeries:
    for _ in range(times):
        series = series.differentiate()
    return series


def forward_solved_form(u0: TruncatedSeries, u1: TruncatedSeries, level: int) -> TruncatedSeries:
    """u_level from the free functions u_0, u_1 of du_n/dt = n(n-1) u_{n-2} - u_{n+2}."""
    if level == 0:
        return u0
    if level == 1:
        return u1
    if level % 2 == 0:
        n = level // 2 - 1
        source, top, sign = u0, n + 1, (-1) ** (n + 1)
        terms = [(_a1(i, n), top - 2 * i) for i in range(top // 2 + 1)]
    else:
        m = (level - 1) // 2
        source, top, sign = u1, m, (-1) ** m
        terms = [(_a2(j, m), m + 2 - 2 * j) for j in range(1, (m + 2) // 2 + 1)]
    if source.valid_order < top:
        raise DependencyConeViolation(
            f"level {level} needs {top} derivatives, series valid to {source.valid_order}")
    total = None
    for weight, order in terms:
        if order < 0 or weight == 0:
            continue
        term = _derivative(source, order).scale(weight * sign)
        total = term if total is None else total.add(term)
    return total


def init_coeff_recursion(initial_moments: Sequence[Scalar], order: int) -> Tuple[List[Scalar], List[Scalar]]:
    """Taylor data c1_k = u_0^(k)(0), c2_k = u_1^(k)(0) fixed by the initial moments."""
    if len(initial_moments) < 2 * order + 2:
        raise DependencyConeViolation(
            f"order {order} needs moments u_0..u_{2 * order + 1}, got {len(initial_moments)}")
    moments = list(initial_moments)
    if all_exact(moments):
        moments = [to_exact(v) for v in moments]
    first, second = [], []
    for k in range(order + 1):
        sign = -1 if k % 2 else 1
        value = sign * moments[2 * k]
        value -= sum((_a1(i, k - 1) * first[k - 2 * i] for i in range(1, k // 2 + 1)), moments[0] * 0)
        first.append(value)
        value = sign * moments[2 * k + 1]
        value -= sum((_a2(i + 1, k) * second[k - 2 * i] for i in range(1, k // 2 + 1)), moments[0] * 0)
        second.append(value)
    return first, second


def taylor_series(derivatives: Sequence[Scalar]) -> TruncatedSeries:
    """sum_k d_k t^k / k! from derivative values d_k at 0."""
    return TruncatedSeries(tuple(to_exact(d) / factorial(k) if is_exact(d) else d / factorial(k)
                                 for k, d in enumerate(derivatives)))


def reference_moments(t: float) -> Tuple[float, float]:
    """u_0, u_1 of the Gaussian(1, 1/2) start under u_t = u_xx - x^2 u."""
    if t < 0:
        raise DomainError("reference moments are defined for t >= 0")
    s = 1 + 3 * math.exp(4 * t)
    exponent = -(1 - 4 / s) / 3
    u0 = 2 * math.exp(exponent + t) / math.sqrt(s)
    u1 = 8 * math.exp(exponent + 3 * t) / math.sqrt(s ** 3)
    return u0, u1


def reference_moment_series(order: int = MOMENT_SERIES_ORDER) -> Tuple[TruncatedSeries, TruncatedSeries]:
    """Exact Taylor series at t = 0 of both reference moments."""
    t = polynomial_series((0, 1), 0, order)
    s = (t.scale(4)).exp().scale(3).add(1)
    exponent = s.reciprocal().scale(Fraction(4, 3)).add(Fraction(-1, 3))
    u0 = exponent.add(t).exp().mul(s.power(Fraction(-1, 2))).scale(2)
    u1 = exponent.add(t.scale(3)).exp().mul(s.power(Fraction(-3, 2))).scale(8)
    return u0, u1


def reference_radius() -> float:
    """Distance from t = 0 to the nearest zero of 1 + 3 exp(4t)."""
    return math.sqrt(math.pi ** 2 + math.log(3) ** 2) / 4


def kolmogorov_point_transform(direction: str, point: Tuple[float, float, float]) -> Tuple[float, float, float]:
    """Map u_t = u_xx - x^2 u to the heat equation (``forward``) or back (``inverse``)."""
    t, x, u = (float(v) for v in point)
    if direction == FORWARD:
        return (math.exp(4 * t) - 1) / 4, x * math.exp(2 * t), u * math.exp(-x * x / 2 - t)
    if direction != "inverse":
        raise ValueError(f"unknown direction: {direction}")
    stretch = 1 + 4 * t
    if stretch <= 0:
        raise DomainError(f"inverse transform needs 1 + 4 t~ > 0, got t~ = {t}")
    return (math.log(stretch) / 4, x / math.sqrt(stretch),
            u * stretch ** 0.25 * math.exp(x * x / (2 * stretch)))


def quadrature_moments(t: float, n_max: int, start: GaussianSpec = GaussianSpec()) -> List[float]:
    """Moments of the integral solution of u_t = u_xx - x^2 u by nested adaptive quadrature."""
    if t <= 0:
        return [float(m) for m in gaussian_moments(start, n_max)]
    spread = math.exp(4 * t) - 1
    stretch = math.exp(2 * t)

    def inner(x: float) -> float:
        centre = stretch * x
        value, _ = quad(lambda xp: math.exp(-(centre - xp) ** 2 / spread) * start.density(xp)
                        * math.exp(-xp * xp / 2), -QUADRATURE_BOUND, QUADRATURE_BOUND,
                        epsabs=1e-14, epsrel=1e-12, limit=200)
        return math.exp(x * x / 2 + t) / math.sqrt(math.pi * spread) * value

    moments = []
    for n in range(n_max + 1):
        value, _ = quad(lambda x: x ** n * inner(x), -QUADRATURE_BOUND, QUADRATURE_BOUND,
                        epsabs=1e-12, epsrel=1e-11, limit=200)
        moments.append(value)
    return moments


def moment_residual(spec: MomentSystemSpec, series: Sequence[TruncatedSeries]) -> Tuple[float, ...]:
    """Per-level max |u_n' - a n(n-1) u_{n-2} + b n u_n - c u_{n+2}| within valid orders."""
    last = len(series) - 1 - (2 if spec.c != 0 else 0)
    out = []
    for n in range(last + 1):
        value = series[n].differentiate()
        if n >= 2:
            value = value.add(series[n - 2].scale(-spec.a * n * (n - 1)))
        if spec.b != 0:
            value = value.add(series[n].scale(spec.b * n))
        if spec.c != 0:
            value = value.add(series[n + 2].scale(-spec.c))
        out.append(max(magnitude(c) for c in value.coeffs[:value.valid_order + 1]))
    return tuple(out)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    values: np.ndarray = field(repr=False)

    def at_end(self, n: int) -> float:
        return float(self.values[-1, n])

    def level(self, n: int) -> np.ndarray:
        return self.values[:, n]

    @property
    def u0_drift(self) -> float:
        return float(np.max(np.abs(self.values[:, 0] - self.values[0, 0])))


def integrate_truncated(spec: MomentSystemSpec, initial_moments: Sequence[Scalar], t_end: float,
                        depth: int, steps: int = MOMENT_STEP_DIVISOR) -> Trajectory:
    """RK4 on u_0..u_depth with u_n = 0 beyond depth."""
    if len(initial_moments) < depth + 1:
        raise DependencyConeViolation(f"need moments u_0..u_{depth}")
    state = np.array([float(v) for v in initial_moments[:depth + 1]])
    if t_end == 0:
        return Trajectory(np.array([0.0]), state[np.newaxis, :])
    if t_end < 0:
        raise DomainError("integration runs forward in t")
    n = np.arange(depth + 1, dtype=float)
    a, b, c = float(spec.a), float(spec.b), float(spec.c)

    def rhs(u: np.ndarray) -> np.ndarray:
        lower = np.zeros_like(u)
        lower[2:] = u[:-2]
        upper = np.zeros_like(u)
        upper[:-2] = u[2:]
        return a * n * (n - 1) * lower - b * n * u + c * upper

    h = t_end / steps
    values = [state]
    for _ in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * h * k1)
        k3 = rhs(state + 0.5 * h * k2)
        k4 = rhs(state + h * k3)
        state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        values.append(state)
    trajectory = Trajectory(np.linspace(0.0, t_end, steps + 1), np.array(values))
    logger.debug("RK4 %s system depth %d: %d steps to t=%g, u0 drift %.3g",
                 spec.direction, depth, steps, t_end, trajectory.u0_drift)
    return trajectory


@dataclass(frozen=True)
class SolutionChoice:
    """u(t) = f(t) + psi(t) exp(-gamma^2 / t^2), flat-extended at t = 0."""

    f: Polynomial
    psi: Polynomial
    gamma: float

    @property
    def bump(self) -> BumpSpec:
        return BumpSpec(self.gamma ** 2)

    def derivative(self, m: int, t: float, perturbed: bool = True) -> float:
        value = float(self.f.deriv(m)(t)) if m else float(self.f(t))
        if not perturbed:
            return value
        for j in range(m + 1):
            psi = self.psi.deriv(m - j) if m - j else self.psi
            value += comb(m, j) * float(psi(t)) * bump_derivative(self.bump, j, t)
        return value

    def value(self, t: float, perturbed: bool = True) -> float:
        return self.derivative(0, t, perturbed)


@dataclass(frozen=True)
class AmbiguityPair:
    u0: SolutionChoice
    u1: SolutionChoice

    def initial_data_agree(self, max_order: int = 6) -> bool:
        """Perturbed and plain choices share every derivative up to max_order at t = 0."""
        return all(choice.derivative(m, 0.0, True) == choice.derivative(m, 0.0, False)
                   for choice in (self.u0, self.u1) for m in range(max_order + 1))

    def solved_form(self, level: int, t: float, perturbed: bool = True) -> float:
        return solved_form_pointwise(lambda m, s: self.u0.derivative(m, s, perturbed),
                                     lambda m, s: self.u1.derivative(m, s, perturbed), level, t)


def ambiguity_pair(f_pair: Tuple[Polynomial, Polynomial], psi_pair: Tuple[Polynomial, Polynomial],
                   gamma0: float, gamma1: float) -> AmbiguityPair:
    if gamma0 <= 0 or gamma1 <= 0:
        raise DomainError("bump widths must be positive")
    return AmbiguityPair(SolutionChoice(f_pair[0], psi_pair[0], gamma0),
                         SolutionChoice(f_pair[1], psi_pair[1], gamma1))


DerivativeFunction = Callable[[int, float], float]


def solved_form_pointwise(u0: DerivativeFunction, u1: DerivativeFunction, level: int, t: float) -> float:
    """Pointwise solved form from derivative oracles u(m, t)."""
    if level == 0:
        return u0(0, t)
    if level == 1:
        return u1(0, t)
    if level % 2 == 0:
        n = level // 2 - 1
        return (-1) ** (n + 1) * sum(_a1(i, n) * u0(n + 1 - 2 * i, t)
                                     for i in range((n + 1) // 2 + 1))
    m = (level - 1) // 2
    return (-1) ** m * sum(_a2(j, m) * u1(m + 2 - 2 * j, t) for j in range(1, (m + 2) // 2 + 1))


def recursion_series(order: int = MOMENT_SERIES_ORDER) -> Tuple[TruncatedSeries, TruncatedSeries]:
    """u_0, u_1 series fixed by the Gaussian(1, 1/2) initial moments."""
    first, second = init_coeff_recursion(gaussian_moments(GaussianSpec(), 2 * order + 1), order)
    return taylor_series(first), taylor_series(second)


def moment_radius(series: Optional[Sequence[TruncatedSeries]] = None) -> Tuple[RadiusEstimate, ...]:
    """Tail-method radius estimates of the u_0, u_1 series."""
    if series is None:
        series = recursion_series()
    return tuple(radius_estimate(s.coeffs, RADIUS_METHOD_TAIL) for s in series)


def reference_rows(t_max: float = DEFAULT_TMAX, samples: int = 11, depths: Sequence[int] = (8, 16),
                   series: Optional[Sequence[TruncatedSeries]] = None,
                   levels: Sequence[int] = (0, 1, 2, 3)) -> List[dict]:
    """Closed-form, solved-form and truncated moments on a grid of t.

    The solved forms start from the Taylor data that the initial Gaussian
    moments fix; closed forms exist for u_0 and u_1 only.
    """
    u0_series, u1_series = series if series is not None else recursion_series()
    start = gaussian_moments(GaussianSpec(), max(depths))
    solved = {n: forward_solved_form(u0_series, u1_series, n) for n in levels}
    trajectories = {depth: integrate_truncated(MomentSystemSpec(1, 0, -1), start, t_max, depth)
                    for depth in depths}
    rows = []
    for t in np.linspace(0.0, t_max, samples):
        t = float(t)
        closed = reference_moments(t)
        for n in levels:
            if n < len(closed):
                rows.append({"t": t, "n": n, "u_n": closed[n], "source": "closed_form"})
            rows.append({"t": t, "n": n, "u_n": float(solved[n](t)), "source": "solved_form"})
            for depth, trajectory in trajectories.items():
                value = float(np.interp(t, trajectory.times, trajectory.level(n)))
                rows.append({"t": t, "n": n, "u_n": value, "source": f"truncated_{depth}"})
    return rows
