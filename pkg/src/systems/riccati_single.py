import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple, Union

from constants import CENTRAL_DIFFERENCE_STEP, REPARAM_FIT_TOLERANCE, REPARAM_SAMPLE_XS
from engine.series import TruncatedSeries
from errors import PoleEvaluation, TransformSingular
from utils.scalars import Scalar, is_exact, magnitude, to_exact

logger = logging.getLogger(__name__)

Point = Tuple[Scalar, Scalar]


def _lift(*values):
    """Promote ints to Fraction when every value is exact."""
    if all(is_exact(v) for v in values):
        return tuple(to_exact(v) for v in values)
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class RiccatiFamilyMember:
    """y(x) = x^2 / (1 + c x), the general solution of y' = y/x + y^2/x^3."""

    c: Scalar

    def _denominator(self, x: Scalar) -> Scalar:
        d = 1 + self.c * x
        if d == 0:
            raise PoleEvaluation(f"x = {x} is the pole -1/c of the member c = {self.c}")
        return d

    def __call__(self, x: Scalar) -> Scalar:
        c, x = _lift(self.c, x)
        return x * x / self._denominator(x)

    def derivative(self, x: Scalar) -> Scalar:
        c, x = _lift(self.c, x)
        d = self._denominator(x)
        return (2 * x + c * x * x) / (d * d)

    def series(self, order: int) -> TruncatedSeries:
        """x^2 * sum (-c)^k x^k around 0."""
        c = to_exact(self.c) if is_exact(self.c) else float(self.c)
        coeffs = [c * 0, c * 0] + [(-c) ** k for k in range(order - 1)]
        return TruncatedSeries(tuple(coeffs[:order + 1]), 0)

    def ode_residual(self, x: Scalar) -> Scalar:
        return riccati_ode_residual(x, self(x), self.derivative(x))


def general_solution(c: Scalar) -> RiccatiFamilyMember:
    return RiccatiFamilyMember(c)


def riccati_ode_residual(x: Scalar, y: Scalar, yprime: Scalar) -> Scalar:
    """y' - y/x - y^2/x^3; the same form holds for transformed variables."""
    x, y, yprime = _lift(x, y, yprime)
    return yprime - y / x - y * y / x ** 3


@dataclass(frozen=True)
class FieldPolynomial:
    """Sum of c * x^i * y^j; negative i allowed."""

    terms: Tuple[Tuple[Tuple[int, int], Scalar], ...]

    @classmethod
    def from_dict(cls, terms: Dict[Tuple[int, int], Scalar]) -> "FieldPolynomial":
        return cls(tuple(sorted((k, v) for k, v in terms.items() if v != 0)))

    def __call__(self, x: Scalar, y: Scalar) -> Scalar:
        x, y = _lift(x, y)
        return sum((c * x ** i * y ** j for (i, j), c in self.terms), x * 0)

    def partial_x(self) -> "FieldPolynomial":
        return FieldPolynomial.from_dict({(i - 1, j): c * i for (i, j), c in self.terms if i != 0})

    def partial_y(self) -> "FieldPolynomial":
        return FieldPolynomial.from_dict({(i, j - 1): c * j for (i, j), c in self.terms if j != 0})


FieldComponent = Union[FieldPolynomial, Callable[[Scalar, Scalar], Scalar]]


@dataclass(frozen=True)
class TangentField:
    """Infinitesimal generator xi(x, y) d/dx + eta(x, y) d/dy."""

    name: str
    xi: FieldComponent
    eta: FieldComponent

    def partials(self, x: Scalar, y: Scalar) -> Tuple[Scalar, Scalar, Scalar, Scalar]:
        """(xi_x, xi_y, eta_x, eta_y) exactly for polynomials, else by central differences."""
        return _partials(self.xi, x, y) + _partials(self.eta, x, y)


def _partials(component: FieldComponent, x: Scalar, y: Scalar) -> Tuple[Scalar, Scalar]:
    if isinstance(component, FieldPolynomial):
        return component.partial_x()(x, y), component.partial_y()(x, y)
    h = CENTRAL_DIFFERENCE_STEP
    x, y = float(x), float(y)
    dx = (component(x + h, y) - component(x - h, y)) / (2 * h)
    dy = (component(x, y + h) - component(x, y - h)) / (2 * h)
    return dx, dy


def standard_fields() -> Dict[str, TangentField]:
    """The four concrete symmetry generators of y' = y/x + y^2/x^3."""
    poly = FieldPolynomial.from_dict
    return {
        "X0": TangentField("X0", poly({(0, 0): 1}), poly({(-1, 1): 3, (1, 0): -1})),
        "X1": TangentField("X1", poly({(1, 0): 1}), poly({(0, 1): 2})),
        "X2": TangentField("X2", poly({(2, 0): 1}), poly({(1, 1): 1})),
        "X3": TangentField("X3", poly({(3, 0): 1}), poly({(0, 2): 1, (2, 1): 1})),
    }


def determining_residual(tangent: TangentField, sample_points: Iterable[Point]) -> Scalar:
    """Max |determining equation| over the samples; exact for rational points and polynomial fields."""
    worst = 0
    for x, y in sample_points:
        if x == 0:
            raise ValueError("determining residual needs x != 0")
        x, y = _lift(x, y)
        xi, eta = tangent.xi(x, y), tangent.eta(x, y)
        xi_x, xi_y, eta_x, eta_y = tangent.partials(x, y)
        value = (xi * (3 * y ** 2 * x ** 2 + y * x ** 4)
                 - eta * (2 * y * x ** 3 + x ** 5)
                 - xi_x * (y ** 2 * x ** 3 + y * x ** 5)
                 - xi_y * (y ** 4 + 2 * y ** 3 * x ** 2 + y ** 2 * x ** 4)
                 + eta_x * x ** 6
                 + eta_y * (y ** 2 * x ** 3 + y * x ** 5))
        worst = max(worst, abs(value))
    return worst


class PointTransform(str, Enum):
    T0 = "T0"
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"


def apply_point_transform(transform: PointTransform, epsilon: Scalar, point: Point) -> Point:
    transform = PointTransform(transform)
    x, y = point
    if epsilon == 0:
        return x, y
    x, y, epsilon = _lift(x, y, epsilon)
    if transform is PointTransform.T0:
        if x == 0:
            raise TransformSingular("T0 is singular at x = 0")
        shifted = x + epsilon
        return shifted, (y - x * x) * shifted ** 3 / x ** 3 + shifted ** 2
    if transform is PointTransform.T1:
        unit = math.exp(float(epsilon))
        return unit * x, unit * unit * y
    if transform is PointTransform.T2:
        d = 1 - epsilon * x
        if d == 0:
            raise TransformSingular(f"T2 singular at eps*x = 1 (x = {x})")
        return x / d, y / d
    s, denominator = _t3_parts(epsilon, x, y)
    return x / s, y * x * x / denominator


def _t3_parts(epsilon, x, y):
    s2 = 1 - 2 * epsilon * x * x
    if s2 <= 0:
        raise TransformSingular(f"T3 needs 2*eps*x^2 < 1, got x = {x}")
    s = math.sqrt(float(s2))
    denominator = y * s2 - (y - x * x) * s
    if denominator == 0:
        raise TransformSingular(f"T3 denominator vanishes at ({x}, {y})")
    return s, denominator


def _jacobian(transform: PointTransform, epsilon, x, y) -> Tuple[Scalar, Scalar, Scalar]:
    """(dx~/dx, dy~/dx, dy~/dy); x~ never depends on y."""
    if transform is PointTransform.T0:
        if x == 0:
            raise TransformSingular("T0 is singular at x = 0")
        shifted = x + epsilon
        cube = shifted ** 3 / x ** 3
        dy_dx = (-2 * x * cube
                 + (y - x * x) * (3 * shifted ** 2 / x ** 3 - 3 * shifted ** 3 / x ** 4)
                 + 2 * shifted)
        return 1, dy_dx, cube
    if transform is PointTransform.T1:
        unit = math.exp(float(epsilon))
        return unit, 0, unit * unit
    if transform is PointTransform.T2:
        d = 1 - epsilon * x
        if d == 0:
            raise TransformSingular(f"T2 singular at eps*x = 1 (x = {x})")
        return 1 / d ** 2, epsilon * y / d ** 2, 1 / d
    s, denominator = _t3_parts(epsilon, x, y)
    d_y = s * s - s
    d_x = -4 * epsilon * x * y + 2 * x * s + 2 * epsilon * x * (y - x * x) / s
    dy_dy = x * x * (denominator - y * d_y) / denominator ** 2
    dy_dx = y * (2 * x * denominator - x * x * d_x) / denominator ** 2
    return 1 / s ** 3, dy_dx, dy_dy


def induced_derivative(transform: PointTransform, epsilon: Scalar, point: Point,
                       yprime: Scalar) -> Scalar:
    """Prolongation of a point transform to the first derivative."""
    transform = PointTransform(transform)
    if epsilon == 0:
        return yprime
    x, y, yprime, epsilon = _lift(point[0], point[1], yprime, epsilon)
    dx, dy_dx, dy_dy = _jacobian(transform, epsilon, x, y)
    if dx == 0:
        raise TransformSingular("dx~/dx vanishes")
    return (dy_dx + dy_dy * yprime) / dx


NEW_PARAM = "NewParam"
INVARIANT = "Invariant"
NOT_IN_FAMILY = "NotInFamily"


def stated_reparam(transform: PointTransform, epsilon: Scalar, c: Scalar) -> Scalar:
    """Closed-form parameter maps listed alongside the four transforms."""
    transform = PointTransform(transform)
    if transform is PointTransform.T0:
        return c / (1 - c * epsilon)
    if transform is PointTransform.T1:
        return math.exp(-float(epsilon)) * c
    if transform is PointTransform.T2:
        return c + epsilon
    return c


@dataclass(frozen=True)
class ReparamResult:
    kind: str
    c_tilde: Optional[Scalar] = None
    fit_residual: float = 0.0
    stated: Optional[Scalar] = None
    note: str = field(default="", compare=False)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c_tilde": self.c_tilde, "fit_residual": self.fit_residual,
                "stated": self.stated, "note": self.note}


def classify_reparam(transform: PointTransform, epsilon: Scalar, c: Scalar,
                     sample_xs: Sequence[float] = REPARAM_SAMPLE_XS,
                     tolerance: float = REPARAM_FIT_TOLERANCE) -> ReparamResult:
    """Fit the transformed member to x~^2/(1 + c~ x~) and cross-validate across samples."""
    transform = PointTransform(transform)
    if len(sample_xs) < 3:
        raise ValueError("classification needs at least three sample points")
    member = RiccatiFamilyMember(c)
    fitted = []
    for x in sample_xs:
        xt, yt = apply_point_transform(transform, epsilon, (x, member(x)))
        if xt == 0 or yt == 0:
            raise TransformSingular(f"sample x = {x} maps onto the axis")
        fitted.append(float((xt * xt / yt - 1) / xt))
    reference = sum(fitted[:3]) / 3
    scale = max(1.0, abs(reference))
    fit_residual = max(abs(value - reference) for value in fitted) / scale
    stated = stated_reparam(transform, epsilon, c)
    note = ""
    if transform is PointTransform.T2:
        note = "parameter label of the listed map is ambiguous; fitted value reported"
        logger.warning("T2 reparametrization: %s (fitted %.17g, listed %.17g)",
                       note, reference, float(stated))
    if fit_residual > tolerance:
        return ReparamResult(NOT_IN_FAMILY, None, fit_residual, stated, note)
    if abs(reference - float(c)) <= tolerance * max(1.0, abs(float(c))):
        return ReparamResult(INVARIANT, c, fit_residual, stated, note)
    return ReparamResult(NEW_PARAM, reference, fit_residual, stated, note)
