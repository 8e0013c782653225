"""
Counterexample reproductions and leading-block codings.

The ex21 counterexample uses {3x/4, x/4 + 3/4} with balls B(phi_I(0), 2^-|I|);
the ex22 one uses {x/2, x/2 + 1/2} with balls restricted to words
beginning with a fixed block J.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from .config import load_preset
from .dimension import similarity_dimension
from .errors import InvariantViolation, ValidationError
from .ifs_core import NaturalSampler, iter_level_maps
from .khintchine import ApproxFunction, CenterCache, ZPoint, limsup_hit_experiment, rank_covered_measure
from .models.ifs import Ifs1D, Word
from .models.results import DimensionResult

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = Fraction(5, 8)
HOEFFDING_T = Fraction(1, 8)
# digit weights whose push-forward under ex21 is Lebesgue measure on [0, 1]
EX21_WEIGHTS = (0.75, 0.25)


def sigma_count(m: int, threshold: Fraction = DEFAULT_THRESHOLD) -> int:
    """Number of binary words of length m with at least ceil(threshold*m) ones."""
    if m < 1:
        raise ValidationError(f"m must be positive, got {m}", "m")
    threshold = Fraction(threshold)
    least = -(-threshold.numerator * m // threshold.denominator)
    total = term = math.comb(m, least)
    for k in range(least, m):
        term = term * (m - k) // (k + 1)
        total += term
    return total


@dataclass
class HoeffdingBound:
    """(2 e^{-2 t^2})^m written as 2^m e^{exponent}."""
    m: int
    t: Fraction
    exponent: float
    log_value: float

    @property
    def value(self) -> float:
        try:
            return math.exp(self.log_value)
        except OverflowError:
            return math.inf

    def dominates(self, count: int) -> bool:
        """Exact-enough check count <= 2^m e^{exponent} at 50 digits."""
        with mpmath.workdps(50):
            return mpmath.log(count) <= self.m * mpmath.log(2) + self.exponent if count > 0 else True


def hoeffding_bound(m: int, t: Fraction = HOEFFDING_T) -> HoeffdingBound:
    if m < 1:
        raise ValidationError(f"m must be positive, got {m}", "m")
    exponent = -2 * m * float(t) ** 2
    return HoeffdingBound(m, Fraction(t), exponent, m * math.log(2) + exponent)


@dataclass
class TailReport:
    """Tail of the ex21 covering sum from rank N."""
    n: int
    geometric: float
    exact_partial: float
    enumeration_bound: int


def example21_tail(n: int, enumeration: int = 2000,
                   threshold: Fraction = DEFAULT_THRESHOLD) -> TailReport:
    """
    Closed form 4 e^{-N/32} / (1 - e^{-1/32}) and the exact-count partial tail
    sum_{m=N}^{enumeration} 4 #Sigma_m 2^-m.
    """
    if n < 1:
        raise ValidationError(f"N must be positive, got {n}", "tail_n")
    ratio = math.exp(-1 / 32)
    geometric = 4 * math.exp(-n / 32) / (1 - ratio)
    with mpmath.workdps(30):
        partial = mpmath.fsum(
            4 * mpmath.mpf(sigma_count(m, threshold)) / mpmath.mpf(2) ** m
            for m in range(n, max(enumeration, n) + 1)
        )
    return TailReport(n, geometric, float(partial), max(enumeration, n))


@dataclass
class WindowEstimate:
    """Share of samples hit at >= k ranks inside [start, end]."""
    start: int
    end: int
    fraction: float
    stderr: float
    contrast_fraction: Optional[float] = None


@dataclass
class Example21Report:
    m_max: int
    counts: List[int]
    bounds: List[HoeffdingBound]
    tail: TailReport
    windows: List[WindowEstimate] = field(default_factory=list)

    def rows(self) -> List[Tuple]:
        rows = []
        for m, (count, bound) in enumerate(zip(self.counts, self.bounds), start=1):
            rows.append((m, count, bound.value, count / 2 ** m, math.exp(bound.exponent)))
        return rows


def example21_report(m_max: int = 64, tail_n: int = 300, enumeration: int = 2000,
                     threshold: Fraction = DEFAULT_THRESHOLD) -> Example21Report:
    """
    Exact #Sigma_m against the Hoeffding bound for m <= m_max, plus the tail.

    Raises:
        InvariantViolation: If some count with m >= 8 exceeds its bound
    """
    counts = [sigma_count(m, threshold) for m in range(1, m_max + 1)]
    bounds = [hoeffding_bound(m) for m in range(1, m_max + 1)]
    for m, (count, bound) in enumerate(zip(counts, bounds), start=1):
        if m >= 8 and not bound.dominates(count):
            raise InvariantViolation(f"#Sigma_{m} = {count} exceeds the Hoeffding bound")
    return Example21Report(m_max, counts, bounds, example21_tail(tail_n, enumeration, threshold))


def _window_estimates(stats, n_ranks: int, window: int, step: int, k: int) -> List[WindowEstimate]:
    estimates = []
    for start in range(1, n_ranks - window + 1, step):
        end = start + window
        p = stats.hitter_fraction(k, start, end)
        estimates.append(WindowEstimate(start, end, p, math.sqrt(p * (1 - p) / stats.samples)))
    return estimates


def example21_montecarlo(
    n_ranks: int,
    samples: int,
    seed: int = 0,
    window: int = 20,
    step: int = 5,
    k: int = 1,
    contrast_c: Fraction = Fraction(1, 2),
    max_depth: int = 256,
    progress: bool = True,
) -> List[WindowEstimate]:
    """
    Lebesgue share of points hit at >= k ranks of [M, M + window] by the
    balls B(phi_I(0), 2^-|I|), for M = 1, 1 + step, ...

    The contrast column uses B(phi_I(0), c Diam(X_I)) on the same samples.
    """
    if window >= n_ranks:
        raise ValidationError(f"window {window} must be shorter than ranks {n_ranks}", "window")
    ifs = load_preset("ex21")
    sampler = NaturalSampler.from_weights(EX21_WEIGHTS, seed)
    z = ZPoint.parse("fixpoint:1", ifs, n_ranks)
    dyadic = ApproxFunction.parse("geometric:1,1/2", ignore_diameter=True)
    contrast = ApproxFunction.parse(f"constant:{Fraction(contrast_c)}")
    stats = limsup_hit_experiment(ifs, z, dyadic, n_ranks, samples, k, sampler,
                                  measure_budget=0, max_depth=max_depth, progress=progress)
    contrast_stats = limsup_hit_experiment(ifs, z, contrast, n_ranks, samples, k, sampler,
                                           measure_budget=0, max_depth=max_depth,
                                           progress=progress)
    estimates = _window_estimates(stats, n_ranks, window, step, k)
    for estimate in estimates:
        estimate.contrast_fraction = contrast_stats.hitter_fraction(k, estimate.start, estimate.end)
    return estimates


@dataclass
class Example22Report:
    """Restricted (convergent) and global (divergent) sums plus the hit estimate."""
    j: Word
    restricted: np.ndarray
    restricted_tail: float
    global_sums: np.ndarray
    window: Tuple[int, int]
    fraction: Optional[float] = None
    stderr: Optional[float] = None
    union_rows: List[Tuple[int, Fraction, Fraction]] = field(default_factory=list)

    def ranks_to_exceed(self, bound: float) -> Optional[int]:
        """Smallest N with global partial sum S_N > bound, or None within the series."""
        above = np.nonzero(self.global_sums > bound)[0]
        return int(above[0]) + 1 if above.size else None


def example22_series(j: Word, n: int) -> Tuple[np.ndarray, float, np.ndarray]:
    """
    Partial sums of sum_{I begins with J} Psi(I) and of sum_I Psi(I), n = 1..N.

    Psi(I) = 2^-|I| |I|^-2 when I begins with J, else 2^-|I|. The restricted
    tail past N is 2^-|J| zeta(2, N + 1).
    """
    length = len(j)
    weight = Fraction(1, 2 ** length)
    ns = np.arange(1, n + 1, dtype=float)
    restricted_terms = np.where(ns >= length, float(weight) / ns ** 2, 0.0)
    # words shorter than J never begin with it
    global_terms = np.where(ns >= length, float(1 - weight), 1.0) + restricted_terms
    with mpmath.workdps(30):
        tail = float(mpmath.mpf(weight.numerator) / weight.denominator * mpmath.zeta(2, n + 1))
    return np.cumsum(restricted_terms), tail, np.cumsum(global_terms)


def example22_union_rows(j: Word, n_max: int = 10) -> List[Tuple[int, Fraction, Fraction]]:
    """(rank, exact union measure of the J-restricted balls, sum of their lengths)."""
    ifs = load_preset("ex22")
    j = ifs.check_word(j)
    af = ApproxFunction.parse("power:1,-2")
    centers = CenterCache(ifs, ZPoint.parse("fixpoint:1", ifs, n_max))
    rows = []
    for rank in range(max(len(j), 1), n_max + 1):
        measure = rank_covered_measure(ifs, centers, af, rank, j)
        total = 2 * Fraction(1, 2 ** rank) * Fraction(1, rank ** 2) * 2 ** (rank - len(j))
        if measure > total:
            raise InvariantViolation(f"union at rank {rank} exceeds the sum of ball lengths")
        rows.append((rank, measure, total))
    return rows


def example22_check(
    j: Word,
    n_ranks: int,
    samples: int,
    seed: int = 0,
    k: int = 1,
    window_start: int = 60,
    series_n: int = 10000,
    max_depth: int = 256,
    progress: bool = True,
) -> Example22Report:
    """
    Estimate the share of X_J hit at >= k ranks of [window_start, n_ranks] by
    the balls B(phi_I(0), 2^-|I| |I|^-2), I beginning with J.
    """
    ifs = load_preset("ex22")
    j = ifs.check_word(j)
    if not j:
        raise ValidationError("J must be nonempty", "j")
    if window_start > n_ranks:
        raise ValidationError(f"window start {window_start} exceeds ranks {n_ranks}", "window_start")
    restricted, tail, global_sums = example22_series(j, series_n)
    report = Example22Report(
        j=j,
        restricted=restricted,
        restricted_tail=tail,
        global_sums=global_sums,
        window=(window_start, n_ranks),
        union_rows=example22_union_rows(j, min(10, n_ranks)),
    )
    sampler = NaturalSampler.from_weights([1, 1], seed)
    af = ApproxFunction.parse("power:1,-2")
    stats = limsup_hit_experiment(
        ifs, ZPoint.parse("fixpoint:1", ifs, n_ranks), af, n_ranks, samples, k, sampler,
        min_rank=window_start, prefix=j, measure_budget=0, max_depth=max_depth,
        progress=progress,
    )
    report.fraction = stats.hitter_fraction(k)
    report.stderr = math.sqrt(report.fraction * (1 - report.fraction) / samples)
    return report


@dataclass
class LeadingBlockReport:
    prefix: Word
    positions: List[int]
    length: int

    @property
    def certified(self) -> bool:
        return self.positions == [1]

    @property
    def verdict(self) -> str:
        if self.certified:
            return f"leading-block certified up to {self.length}"
        return "not certified"


def leading_block_scan(coding: Sequence[int], prefix_length: int) -> LeadingBlockReport:
    """1-based start positions of the leading block z_1..z_l inside the coding."""
    coding = tuple(coding)
    if not 1 <= prefix_length <= len(coding):
        raise ValidationError(f"l must lie in [1, {len(coding)}], got {prefix_length}", "l")
    prefix = coding[:prefix_length]
    positions = [
        start + 1 for start in range(len(coding) - prefix_length + 1)
        if coding[start:start + prefix_length] == prefix
    ]
    return LeadingBlockReport(prefix, positions, len(coding))


def leading_block_construction(digits: Union[int, Sequence[int]], digit: int, block_length: int,
                               blocks: int, seed: int = 0) -> Word:
    """
    i^{2N} followed by `blocks` random blocks from D^N minus i^N.

    The first block does not start with i, so i^{2N} never reappears.
    """
    alphabet = tuple(range(1, digits + 1)) if isinstance(digits, int) else tuple(digits)
    if len(alphabet) < 2:
        raise ValidationError("need at least two digits", "digits")
    if digit not in alphabet:
        raise ValidationError(f"digit {digit} not in {alphabet}", "digit")
    if block_length < 1:
        raise ValidationError("block length must be positive", "block_length")
    allowed = [b for b in itertools.product(alphabet, repeat=block_length)
               if b != (digit,) * block_length]
    openers = [b for b in allowed if b[0] != digit]
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    word = [digit] * (2 * block_length)
    for index in range(blocks):
        pool = openers if index == 0 else allowed
        word.extend(pool[int(rng.integers(len(pool)))])
    return tuple(word)


def leading_block_dimension(ifs: Ifs1D, digit: int, block_length: int,
                            tol: float = 1e-10) -> DimensionResult:
    """Similarity dimension of {phi_I : I in D^N, I != i^N}."""
    ratios = [
        m.ratio for word, m in iter_level_maps(ifs, block_length)
        if word != (digit,) * block_length
    ]
    return similarity_dimension(ratios, tol)
