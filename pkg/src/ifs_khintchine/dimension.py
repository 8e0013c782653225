"""
Similarity dimension and Bowen pressure brackets.
"""

import logging
import math
from fractions import Fraction
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp

from .errors import BracketError, ValidationError
from .ifs_core import check_budget, check_separation, iter_level_maps
from .models.ifs import Ifs1D
from .models.results import DimensionResult

logger = logging.getLogger(__name__)

DEFAULT_PRESSURE_BUDGET = 2 ** 20
MAX_SCAN_EXPONENT = 64.0


def _log_abs(value: Fraction) -> float:
    """log|p/q| without converting p/q to a float first."""
    return math.log(abs(value.numerator)) - math.log(value.denominator)


def similarity_dimension(ratios: Sequence[Fraction], tol: float = 1e-10) -> DimensionResult:
    """
    Solve sum r_i^s = 1 by bisection.

    Args:
        ratios: Contraction ratios in (0, 1)
        tol: Absolute tolerance on s

    Returns:
        DimensionResult with upper - lower <= tol
    """
    if not ratios:
        raise ValidationError("ratio list is empty", "ratios")
    if tol <= 0:
        raise ValidationError(f"tolerance must be positive, got {tol}", "tol")
    if any(not 0 < r < 1 for r in ratios):
        raise ValidationError("ratios must lie in (0, 1)", "ratios")
    logs = np.array(sorted(_log_abs(Fraction(r)) for r in ratios))

    def excess(s: float) -> float:
        return float(np.sum(np.exp(s * logs))) - 1.0

    upper = math.log(len(ratios)) / -logs[-1] + 1.0
    if excess(0.0) == 0.0:
        return DimensionResult(0.0, 0.0, "exact-similarity", tolerance=tol)
    root = bisect(excess, 0.0, upper, xtol=tol / 2)
    return DimensionResult(
        lower=max(root - tol / 2, 0.0),
        upper=root + tol / 2,
        method="exact-similarity",
        tolerance=tol,
    )


def log_derivative_extremes(
    ifs: Ifs1D,
    n: int,
    budget: int = DEFAULT_PRESSURE_BUDGET,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-word log min and log max of |phi_I'| over the hull, for all I in D^n.

    For Moebius maps |phi_I'(p/q)| = q^2 / (c*p + d*q)^2, evaluated with
    integers at both hull endpoints.
    """
    if n < 1:
        raise ValidationError(f"level must be positive, got {n}", "n")
    check_budget(ifs.size ** n, budget, "pressure")
    if ifs.is_similarity:
        # derivatives are constant; enumerate ratio products by level
        logs = np.zeros(1)
        step = np.array([_log_abs(r) for r in ifs.ratios])
        for _ in range(n):
            logs = (logs[:, None] + step[None, :]).ravel()
        return logs, logs
    lo, hi = ifs.hull
    endpoints = [(lo.numerator, lo.denominator), (hi.numerator, hi.denominator)]
    low = np.empty(ifs.size ** n)
    high = np.empty(ifs.size ** n)
    for index, (word, composed) in enumerate(iter_level_maps(ifs, n, budget)):
        if composed.has_pole_in(ifs.hull):
            raise ValidationError(f"pole of phi_{word} lies in the hull", "hull")
        values = [
            2 * (math.log(q) - math.log(abs(composed.c * p + composed.d * q)))
            for p, q in endpoints
        ]
        low[index], high[index] = min(values), max(values)
    logger.debug(f"Derivative extremes for {ifs.name} at level {n}: {low.size} words")
    return low, high


def _pressure(logs: np.ndarray, n: int) -> Callable[[float], float]:
    return lambda s: float(logsumexp(s * logs)) / n


def pressure_bounds(
    ifs: Ifs1D,
    s: float,
    n: int,
    budget: int = DEFAULT_PRESSURE_BUDGET,
) -> Tuple[float, float]:
    """Lower and upper level-n pressure surrogates at exponent s."""
    if s < 0:
        raise ValidationError(f"s must be nonnegative, got {s}", "s")
    low, high = log_derivative_extremes(ifs, n, budget)
    return _pressure(low, n)(s), _pressure(high, n)(s)


def default_level(ifs: Ifs1D, budget: int = DEFAULT_PRESSURE_BUDGET) -> int:
    """Largest n with |D|^n <= budget."""
    n = 1
    while ifs.size ** (n + 1) <= budget:
        n += 1
    return n


def _root(function: Callable[[float], float], xtol: float) -> float:
    upper = 1.0
    while function(upper) >= 0:
        upper *= 2
        if upper > MAX_SCAN_EXPONENT:
            raise BracketError(f"pressure surrogate stays nonnegative up to s = {MAX_SCAN_EXPONENT}")
    if function(0.0) <= 0:
        raise BracketError("pressure surrogate is not positive at s = 0")
    return bisect(function, 0.0, upper, xtol=xtol)


def bowen_bracket(
    ifs: Ifs1D,
    n: Optional[int] = None,
    tol: float = 1e-10,
    budget: int = DEFAULT_PRESSURE_BUDGET,
) -> DimensionResult:
    """
    Bracket the zero of the pressure between the roots of its level-n surrogates.

    The lower endpoint comes from the min-derivative surrogate, the upper one
    from the max-derivative surrogate; both are widened by the bisection tolerance.
    Without `n` the level is the largest one whose |D|^n words fit `budget`.
    """
    if tol <= 0:
        raise ValidationError(f"tolerance must be positive, got {tol}", "tol")
    n = n or default_level(ifs, budget)
    low, high = log_derivative_extremes(ifs, n, budget)
    s_lo = _root(_pressure(low, n), tol / 2)
    s_hi = _root(_pressure(high, n), tol / 2)
    logger.debug(f"Bowen bracket for {ifs.name} at n={n}: [{s_lo}, {s_hi}]")
    return DimensionResult(
        lower=max(s_lo - tol / 2, 0.0),
        upper=s_hi + tol / 2,
        method="pressure-bracket",
        level=n,
        tolerance=tol,
    )


def attractor_dimension(
    ifs: Ifs1D,
    n: Optional[int] = None,
    tol: float = 1e-10,
    budget: int = DEFAULT_PRESSURE_BUDGET,
) -> DimensionResult:
    """
    dim_S for similarity systems, the Bowen bracket for Moebius systems.

    The result equals dim_H only when separation is certified; otherwise it
    is flagged as an upper bound.
    """
    if ifs.is_similarity:
        result = similarity_dimension(ifs.ratios, tol)
    else:
        if not ifs.is_contracting:
            logger.warning(f"{ifs.name} contracts only after composition")
        result = bowen_bracket(ifs, n, tol, budget)
    separation = check_separation(ifs)
    result.hausdorff_certified = separation.certified
    if not separation.certified:
        logger.warning(f"{ifs.name}: separation not certified, dimension is an upper bound only")
    return result


def hausdorff_estimate(ifs: Ifs1D, n: Optional[int] = None, tol: float = 1e-10) -> Tuple[float, float]:
    """
    (dim_H plug-in value, uncertainty).

    Exact similarity root for similarity systems, bracket midpoint and
    half-width otherwise.
    """
    result = attractor_dimension(ifs, n=n, tol=tol)
    return result.midpoint, result.width / 2
