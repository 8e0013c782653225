"""
Height arithmetic along IFS orbits and exact-overlap analysis.

Heights follow two conventions: the reduced denominator of a rational and
the largest coefficient modulus of a primitive quadratic minimal polynomial.
Every bound is checked with Python integers.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mpmath

from .dimension import similarity_dimension
from .errors import InvariantViolation, ValidationError
from .ifs_core import DEFAULT_WORD_BUDGET, check_budget, compose_word, iter_level_maps
from .models.algebraic import WORKING_DPS, HeightOrbitRecord, QuadraticIrrational, RationalPoint
from .models.ifs import Ifs1D, SimilarityMap, Word, format_word
from .models.results import DimensionResult

logger = logging.getLogger(__name__)

RESIDUAL_LIMIT = mpmath.mpf("1e-10")
ROOT_MATCH = mpmath.mpf("1e-12")


def map_height_constant(m: SimilarityMap) -> int:
    """C with H(phi(x)) <= C H(x): lcm of the ratio and translation denominators."""
    return math.lcm(m.scale.denominator, m.translation.denominator)


def rational_image(m: SimilarityMap, point: RationalPoint) -> RationalPoint:
    """
    Exact reduced image of p/q under a rational similarity.

    Raises:
        InvariantViolation: If the image height exceeds C * H(p/q)
    """
    if not isinstance(m, SimilarityMap):
        raise ValidationError("rational images need similarity maps", "maps")
    image = RationalPoint.from_fraction(m(point.value))
    limit = map_height_constant(m) * point.height
    if image.height > limit:
        raise InvariantViolation(f"H({image}) = {image.height} exceeds {limit}")
    return image


def _rational_system(ifs: Ifs1D) -> int:
    if not ifs.is_similarity:
        raise ValidationError(f"{ifs.name} is not a similarity system", "preset")
    return max(map_height_constant(m) for m in ifs.maps)


def rational_orbit_growth(
    ifs: Ifs1D,
    start: RationalPoint,
    depth: int,
    budget: int = DEFAULT_WORD_BUDGET,
) -> List[HeightOrbitRecord]:
    """
    Records phi_I(start) for all words with 1 <= |I| <= depth.

    Equal values within a rank collapse into one record keyed by the first
    word in lexicographic order; `multiplicity` counts the words. Every record
    is checked against C^|I| H(start).
    """
    if depth < 1:
        raise ValidationError(f"depth must be positive, got {depth}", "depth")
    constant = _rational_system(ifs)
    check_budget(sum(ifs.size ** n for n in range(1, depth + 1)), budget)
    records: List[HeightOrbitRecord] = []
    for rank in range(1, depth + 1):
        seen: Dict[Fraction, HeightOrbitRecord] = {}
        bound = constant ** rank * start.height
        for word, composed in iter_level_maps(ifs, rank, budget):
            value = composed(start.value)
            if value in seen:
                seen[value].multiplicity += 1
                continue
            point = RationalPoint.from_fraction(value)
            seen[value] = HeightOrbitRecord(word, point, point.height, bound)
        records.extend(seen.values())
        logger.debug(f"Rank {rank}: {len(seen)} distinct images")
    return records


def quadratic_image(alpha: QuadraticIrrational, digit: int,
                    value: Optional[mpmath.mpf] = None) -> QuadraticIrrational:
    """
    The minimal polynomial of 1/(alpha + i).

    (a i^2 - b i + c) x^2 + (b - 2 i a) x + a, divided by its content with a
    positive leading coefficient; the root selector matches 1/(alpha + i).

    Raises:
        InvariantViolation: If the image is rational or breaks H <= 3 i^2 H(alpha)
    """
    image, _ = _quadratic_step(alpha, digit, value)
    return image


def _quadratic_step(alpha: QuadraticIrrational, digit: int,
                    value: Optional[mpmath.mpf] = None) -> Tuple[QuadraticIrrational, mpmath.mpf]:
    if digit < 1:
        raise ValidationError(f"digit must be a positive integer, got {digit}", "digits")
    a, b, c = alpha.coefficients
    with mpmath.workdps(WORKING_DPS):
        current = alpha.numeric() if value is None else value
        target = 1 / (current + digit)
        image = QuadraticIrrational.normalized(
            a * digit * digit - b * digit + c, b - 2 * digit * a, a, near=target
        )
        if abs(image.numeric() - target) > ROOT_MATCH:
            raise InvariantViolation(f"root selector of {image} does not track 1/(alpha + {digit})")
        if image.residual(target) >= RESIDUAL_LIMIT:
            raise InvariantViolation(f"tracked root of {image} has residual {image.residual(target)}")
    if image.height > 3 * digit * digit * alpha.height:
        raise InvariantViolation(
            f"H = {image.height} exceeds 3 i^2 H(alpha) = {3 * digit * digit * alpha.height}"
        )
    return image, target


def quadratic_orbit_growth(
    digits: Sequence[int],
    alpha: QuadraticIrrational,
    depth: int,
    budget: int = DEFAULT_WORD_BUDGET,
) -> List[HeightOrbitRecord]:
    """
    Records phi_I(alpha) for all words over `digits` with 1 <= |I| <= depth,
    phi_i(x) = 1/(x + i), checked against (max 3 i^2)^|I| H(alpha).

    Rank n is built from rank n-1 by prepending a digit, since
    phi_{iJ}(alpha) = phi_i(phi_J(alpha)).
    """
    digits = tuple(sorted(set(digits)))
    if not digits or digits[0] < 1:
        raise ValidationError("digits must be positive integers", "digits")
    if depth < 1:
        raise ValidationError(f"depth must be positive, got {depth}", "depth")
    check_budget(sum(len(digits) ** n for n in range(1, depth + 1)), budget)
    constant = max(3 * i * i for i in digits)
    records: List[HeightOrbitRecord] = []
    with mpmath.workdps(WORKING_DPS):
        previous: List[Tuple[Word, QuadraticIrrational, mpmath.mpf]] = [((), alpha, alpha.numeric())]
        for rank in range(1, depth + 1):
            bound = constant ** rank * alpha.height
            current = []
            for i in digits:
                for word, value, numeric in previous:
                    image, tracked = _quadratic_step(value, i, numeric)
                    if not 0 < tracked < 1:
                        raise InvariantViolation(f"phi_({format_word((i,) + word)}) left (0, 1)")
                    current.append(((i,) + word, image, tracked))
            current.sort(key=lambda item: item[0])
            records.extend(
                HeightOrbitRecord(word, image, image.height, bound, numeric=tracked)
                for word, image, tracked in current
            )
            previous = current
    return records


@dataclass
class ExponentRecord:
    label: str
    height: int
    distance: mpmath.mpf
    tau: Optional[float]
    running_max: Optional[float]

    @property
    def indeterminate(self) -> bool:
        return self.tau is None


@dataclass
class ExponentEstimate:
    """tau(e) = -log|x - e| / log H(e) over a list of points, in the given order."""
    records: List[ExponentRecord] = field(default_factory=list)

    @property
    def indeterminate(self) -> List[ExponentRecord]:
        return [r for r in self.records if r.indeterminate]

    @property
    def best(self) -> Optional[float]:
        return self.records[-1].running_max if self.records else None

    def top(self, k: int) -> List[ExponentRecord]:
        determinate = [r for r in self.records if not r.indeterminate]
        return sorted(determinate, key=lambda r: r.tau, reverse=True)[:k]


def approx_exponent_estimate(
    x,
    x_error,
    points: Sequence[Tuple[object, int, str]],
) -> ExponentEstimate:
    """
    Approximation exponents of x against (value, height, label) points.

    A pair is indeterminate when |x - e| does not exceed the certified error
    of x, or when H(e) = 1 makes the exponent undefined. Indeterminate pairs
    stay in the list and leave the running maximum unchanged.
    """
    estimate = ExponentEstimate()
    running: Optional[float] = None
    with mpmath.workdps(WORKING_DPS):
        target = _mp(x)
        error = _mp(x_error)
        for value, height, label in points:
            distance = abs(target - _mp(value))
            tau = None
            if distance > error and height > 1:
                tau = float(-mpmath.log(distance) / mpmath.log(height))
                running = tau if running is None else max(running, tau)
            estimate.records.append(ExponentRecord(label, height, distance, tau, running))
    return estimate


def _mp(value) -> mpmath.mpf:
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    if isinstance(value, RationalPoint):
        return mpmath.mpf(value.numerator) / value.denominator
    if isinstance(value, QuadraticIrrational):
        return value.numeric()
    return mpmath.mpf(value)


def mass_transference_exponent(gamma: Fraction, constant: int, height: int,
                               order: int = 1) -> float:
    """
    Threshold t above which (gamma^n Diam X)^t < (C^n H(a))^-order for all large n.

    Equal to order * log C / log(1/gamma); `height` only shifts the finitely many
    exceptional ranks.
    """
    if not 0 < gamma < 1:
        raise ValidationError(f"gamma must lie in (0, 1), got {gamma}", "gamma")
    if constant < 1 or height < 1 or order < 1:
        raise ValidationError("C, H and order must be positive", "constant")
    return order * math.log(constant) / -math.log(gamma)


def well_approximable_coding(fill_digit: int, break_digit: int, t: float, blocks: int) -> Word:
    """
    P_1 = (break), P_{k+1} = P_k fill^{ceil((t-1)|P_k|)} break.

    With fill fixing the start point, phi_{P_k}(a) sits within about
    Diam(X_{P_k})^t of the resulting point for every k.
    """
    if fill_digit == break_digit:
        raise ValidationError("fill and break digits must differ", "digits")
    if t < 1:
        raise ValidationError(f"t must be at least 1, got {t}", "t")
    if blocks < 1:
        raise ValidationError("need at least one block", "blocks")
    word: Tuple[int, ...] = (break_digit,)
    for _ in range(blocks - 1):
        word = word + (fill_digit,) * math.ceil((t - 1) * len(word)) + (break_digit,)
    return word


def continued_fraction_digits(value, depth: int) -> List[int]:
    """Partial quotients [a0; a1, ...] of a Fraction (exact) or a real (30 digits)."""
    if depth < 1:
        raise ValidationError(f"depth must be positive, got {depth}", "depth")
    quotients: List[int] = []
    if isinstance(value, (Fraction, int)):
        value = Fraction(value)
        while len(quotients) < depth:
            whole = math.floor(value)
            quotients.append(whole)
            value -= whole
            if value == 0:
                break
            value = 1 / value
        return quotients
    with mpmath.workdps(WORKING_DPS):
        value = _mp(value)
        floor_tolerance = mpmath.mpf(10) ** (-WORKING_DPS // 2)
        while len(quotients) < depth:
            whole = int(mpmath.floor(value))
            quotients.append(whole)
            value -= whole
            if value < floor_tolerance:
                break
            value = 1 / value
    return quotients


def detect_exact_overlap(ifs: Ifs1D, k: int, budget: int = DEFAULT_WORD_BUDGET) -> List[Tuple[Word, Word]]:
    """
    Pairs I < J (lexicographic) in D^k with phi_I = phi_J.

    Maps are compared by canonical key: (scale, translation) for similarities,
    the sign-normalized matrix for Moebius maps (experimental).
    """
    if k < 1:
        raise ValidationError(f"k must be positive, got {k}", "k")
    if not ifs.is_similarity:
        logger.warning("Exact-overlap detection for Moebius systems is experimental")
    groups: Dict[Tuple, List[Word]] = defaultdict(list)
    for word, composed in iter_level_maps(ifs, k, budget):
        groups[composed.canonical_key()].append(word)
    pairs = [
        (words[i], words[j])
        for words in groups.values() if len(words) > 1
        for i in range(len(words)) for j in range(i + 1, len(words))
    ]
    pairs.sort()
    logger.debug(f"{ifs.name} at level {k}: {len(pairs)} coinciding pairs")
    return pairs


@dataclass
class OverlapDrop:
    """dim_S of the system and of its level-k power with one duplicate deleted."""
    k: int
    deleted: Word
    full: DimensionResult
    reduced: DimensionResult
    ratios: List[Fraction]


def overlap_dimension_drop(ifs: Ifs1D, k: int, delete: Union[Word, Sequence[int]],
                           tol: float = 1e-10,
                           budget: int = DEFAULT_WORD_BUDGET) -> OverlapDrop:
    """
    Compare dim_S(Phi) with dim_S of {phi_I : I in D^k} minus one copy of phi_J.

    Raises:
        ValidationError: If J is not of length k or phi_J is not duplicated
        InvariantViolation: If the reduced dimension does not drop
    """
    _rational_system(ifs)
    delete = ifs.check_word(tuple(delete))
    if len(delete) != k:
        raise ValidationError(f"word ({format_word(delete)}) is not of length {k}", "delete")
    key = compose_word(ifs, delete).canonical_key()
    ratios = []
    duplicates = 0
    for word, composed in iter_level_maps(ifs, k, budget):
        if composed.canonical_key() == key:
            duplicates += 1
            if word == delete:
                continue
        ratios.append(composed.ratio)
    if duplicates < 2:
        raise ValidationError(f"phi_({format_word(delete)}) is not duplicated at level {k}", "delete")
    full = similarity_dimension(ifs.ratios, tol)
    reduced = similarity_dimension(ratios, tol)
    if not reduced.upper < full.lower:
        raise InvariantViolation(
            f"deleting ({format_word(delete)}) does not lower the similarity dimension"
        )
    return OverlapDrop(k, delete, full, reduced, ratios)
