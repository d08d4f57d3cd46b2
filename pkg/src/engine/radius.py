import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from constants import (
    DECAY_TREND,
    GROWTH_TREND,
    RADIUS_FLOOR,
    RADIUS_METHOD_ROOT,
    RADIUS_METHOD_TAIL,
    RADIUS_MIN_COEFFS,
)
from errors import AllZeroTail, InsufficientCoefficients
from utils.scalars import format_scalar, log_abs

logger = logging.getLogger(__name__)

FINITE = "finite"
INFINITE = "infinite"
ZERO = "zero"


@dataclass(frozen=True)
class RadiusEstimate:
    """Root-test estimate of a convergence radius."""

    radius: float
    window: Tuple[int, int]
    confidence_spread: float
    kind: str = FINITE
    method: str = RADIUS_METHOD_ROOT
    all_zero_tail: bool = False

    @property
    def is_infinite(self) -> bool:
        return self.kind == INFINITE

    @property
    def is_zero(self) -> bool:
        return self.kind == ZERO

    def contains(self, distance: float) -> bool:
        """True when a point at this distance from the base lies strictly inside."""
        return self.is_infinite or (not self.is_zero and abs(distance) < self.radius)

    def describe(self) -> str:
        if self.is_infinite:
            return "Infinite"
        if self.is_zero:
            return "Zero"
        return format_scalar(self.radius)

    def to_dict(self) -> dict:
        return {
            "radius": self.describe(),
            "window": list(self.window),
            "confidence_spread": self.confidence_spread,
            "method": self.method,
        }


def radius_estimate(coeffs: Sequence, method: str = RADIUS_METHOD_ROOT,
                    strict: bool = False, floor: float = RADIUS_FLOOR) -> RadiusEstimate:
    """Estimate the convergence radius from the tail window k in [K/2, K].

    The ``root`` method takes the median of |c_k|^(1/k). The ``tail`` method fits
    log|c_k| with a Theil-Sen slope, which is insensitive to subexponential
    prefactors. Both compare the two halves of the window to detect growth
    (radius Zero) or decay (radius Infinite).
    """
    coeffs = list(coeffs)
    if len(coeffs) < RADIUS_MIN_COEFFS:
        raise InsufficientCoefficients(
            f"need at least {RADIUS_MIN_COEFFS} coefficients, got {len(coeffs)}")
    if method not in (RADIUS_METHOD_ROOT, RADIUS_METHOD_TAIL):
        raise ValueError(f"unknown radius method: {method}")

    order = len(coeffs) - 1
    window = (max(1, order // 2), order)
    ks = [k for k in range(window[0], order + 1) if coeffs[k] != 0]
    if not ks:
        if strict:
            raise AllZeroTail(f"coefficients {window[0]}..{order} are all zero")
        logger.warning("All-zero tail in window %s, reporting infinite radius", window)
        return RadiusEstimate(math.inf, window, 0.0, INFINITE, method, all_zero_tail=True)

    ks = np.array(ks, dtype=float)
    logs = np.array([log_abs(coeffs[int(k)]) for k in ks])
    roots = np.exp(logs / ks)

    if method == RADIUS_METHOD_TAIL and len(ks) >= 4:
        half = len(ks) // 2
        first = _theil_sen(ks[:half + 1], logs[:half + 1])
        last = _theil_sen(ks[half:], logs[half:])
        value = math.exp(_theil_sen(ks, logs))
        trend = math.exp(last - first)
        spread = abs(math.exp(last) - math.exp(first))
    else:
        quarter = max(1, len(roots) // 4)
        value = float(np.median(roots))
        trend = float(np.median(roots[-quarter:]) / np.median(roots[:quarter]))
        spread = float(roots.max() - roots.min())

    logger.debug("radius window=%s method=%s value=%g trend=%g", window, method, value, trend)
    if trend > GROWTH_TREND:
        return RadiusEstimate(0.0, window, spread, ZERO, method)
    if trend < DECAY_TREND or value < floor:
        return RadiusEstimate(math.inf, window, spread, INFINITE, method)
    return RadiusEstimate(1.0 / value, window, spread, FINITE, method)


def _theil_sen(ks: np.ndarray, logs: np.ndarray) -> float:
    """Median of pairwise slopes."""
    i, j = np.triu_indices(len(ks), k=1)
    return float(np.median((logs[j] - logs[i]) / (ks[j] - ks[i])))
