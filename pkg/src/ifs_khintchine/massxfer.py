"""
Ball rescaling B^s = B(x, r^{s/dim_H}) and the cover-sum critical exponent scan.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy.special import logsumexp

from .dimension import attractor_dimension
from .errors import BracketError, ValidationError
from .ifs_core import DEFAULT_WORD_BUDGET, enumerate_level
from .khintchine import ApproxFunction, level_log_power_sums
from .models.algebraic import WORKING_DPS
from .models.ifs import Ifs1D, Word
from .models.results import TargetBall

logger = logging.getLogger(__name__)

DEFAULT_GRID = (0.05, 1.2, 64)


@dataclass(frozen=True)
class ScaledBall:
    center: object
    radius: object
    s: float
    dim_h: float
    scaled_radius: mpmath.mpf
    word: Optional[Word] = None


def scale_ball(ball, s: float, dim_h: float) -> ScaledBall:
    """
    Rescale a TargetBall or a (center, radius) pair to radius r^{s/dim_H}.

    The power is taken at the working precision; s = dim_H returns r itself.
    """
    if isinstance(ball, TargetBall):
        center, radius, word = ball.center, ball.radius, ball.word
    else:
        (center, radius), word = ball, None
    if radius <= 0:
        raise ValidationError(f"radius must be positive, got {radius}", "radius")
    if s <= 0 or dim_h <= 0:
        raise ValidationError("s and dim_H must be positive", "s")
    with mpmath.workdps(WORKING_DPS):
        if hasattr(radius, "denominator"):
            r = mpmath.mpf(radius.numerator) / radius.denominator
        else:
            r = mpmath.mpf(radius)
        scaled = r if s == dim_h else r ** (mpmath.mpf(s) / mpmath.mpf(dim_h))
    return ScaledBall(center, radius, s, dim_h, scaled, word)


@dataclass
class CoverRate:
    s: float
    rate: float

    @property
    def verdict(self) -> str:
        if self.rate > 1:
            return "divergent"
        if self.rate < 1:
            return "summable"
        return "critical"


@dataclass
class CriticalExponent:
    """Grid points where the per-rank cover-sum rate crosses 1."""
    lower: float
    upper: float
    t: float
    rates: List[CoverRate]

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _level_log_sums(ifs: Ifs1D, q: float, n: int, log_diameters: Optional[Tuple[np.ndarray, np.ndarray]]):
    if log_diameters is None:
        levels = level_log_power_sums(ifs, q, n)
        return levels[n - 1], levels[n]
    previous, current = log_diameters
    return float(logsumexp(q * previous)), float(logsumexp(q * current))


def _log_diameters(ifs: Ifs1D, n: int, budget: int) -> np.ndarray:
    return np.array([
        math.log(c.diameter.numerator) - math.log(c.diameter.denominator)
        for c in enumerate_level(ifs, n, budget)
    ])


def cover_rates(
    ifs: Ifs1D,
    t: float,
    n: int,
    s_grid: Sequence[float],
    theta: Optional[ApproxFunction] = None,
    budget: int = DEFAULT_WORD_BUDGET,
) -> List[CoverRate]:
    """
    Rate T_n(s) / T_{n-1}(s) of T_n(s) = sum_{I in D^n} (2 (Diam(X_I) theta(n))^t)^s.

    Similarity systems use closed-form level sums; Moebius systems enumerate
    levels n-1 and n once and reuse them across the grid.
    """
    if t < 1:
        raise ValidationError(f"t must be at least 1, got {t}", "t")
    if n < 2:
        raise ValidationError(f"n must be at least 2, got {n}", "n")
    theta = theta or ApproxFunction.parse("constant:1")
    log_theta = theta.log_theta_array(np.array([n - 1, n]))
    log_diameters = None
    if not ifs.is_similarity:
        log_diameters = (_log_diameters(ifs, n - 1, budget), _log_diameters(ifs, n, budget))
    rates = []
    for s in s_grid:
        previous, current = _level_log_sums(ifs, t * s, n, log_diameters)
        # the 2^s factors cancel in the ratio
        log_rate = current - previous + t * s * (log_theta[1] - log_theta[0])
        rates.append(CoverRate(float(s), math.exp(log_rate)))
    return rates


def critical_exponent_scan(
    ifs: Ifs1D,
    t: float = 1.0,
    n: int = 12,
    s_grid: Optional[Sequence[float]] = None,
    theta: Optional[ApproxFunction] = None,
    budget: int = DEFAULT_WORD_BUDGET,
) -> CriticalExponent:
    """
    Bracket the exponent where the per-rank cover sums turn from growing to decaying.

    The default grid has 64 points on [0.05, 1.2] * dim_S.

    Raises:
        BracketError: If the grid does not straddle a rate of 1
    """
    if s_grid is None:
        dim_s = attractor_dimension(ifs).midpoint
        lo, hi, count = DEFAULT_GRID
        s_grid = np.linspace(lo * dim_s, hi * dim_s, count)
    s_grid = sorted(float(s) for s in s_grid)
    if not s_grid or s_grid[0] <= 0:
        raise ValidationError("grid points must be positive", "s_grid")
    rates = cover_rates(ifs, t, n, s_grid, theta, budget)
    for left, right in zip(rates, rates[1:]):
        if left.rate >= 1 > right.rate:
            logger.debug(f"Cover-sum rate crosses 1 on [{left.s}, {right.s}] for t={t}")
            return CriticalExponent(left.s, right.s, t, rates)
    raise BracketError(
        f"grid [{s_grid[0]:.6g}, {s_grid[-1]:.6g}] does not straddle the transition "
        f"(rates {rates[0].rate:.6g} .. {rates[-1].rate:.6g})"
    )
