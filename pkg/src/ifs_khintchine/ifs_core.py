"""
Word and cylinder algebra for one-dimensional IFSs.

All geometry here is exact: cylinders are images of the hull computed
with Fractions, Moebius compositions are integer matrix products.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Iterator, List, Sequence, Tuple, Union

import mpmath
import numpy as np

from .errors import BudgetExceededError, ValidationError
from .models.algebraic import QuadraticIrrational, WORKING_DPS
from .models.ifs import Cylinder, Ifs1D, Map, MoebiusMap, SimilarityMap, Word
from .models.results import SeparationReport

logger = logging.getLogger(__name__)

DEFAULT_WORD_BUDGET = 2 ** 24
DEFAULT_BASE_LEVEL = 3


def check_budget(requested: int, limit: int, name: str = "words") -> None:
    """Raise BudgetExceededError when `requested` exceeds `limit`."""
    if limit is not None and requested > limit:
        raise BudgetExceededError(name, requested, limit)


def compose_word(ifs: Ifs1D, word: Sequence[int], allow_empty: bool = False) -> Map:
    """
    Compose phi_I = phi_{i_1} o ... o phi_{i_n}.

    Args:
        ifs: The system
        word: Digits in D = {1..m}
        allow_empty: Return the identity for the empty word instead of failing

    Returns:
        The composed exact map
    """
    word = ifs.check_word(word)
    if not word:
        if not allow_empty:
            raise ValidationError("empty word; pass allow_empty=True for the identity", "word")
        return SimilarityMap.identity() if ifs.is_similarity else MoebiusMap.identity()
    result = ifs.map_for(word[0])
    for digit in word[1:]:
        result = result.compose(ifs.map_for(digit))
    return result


def cylinder_of(ifs: Ifs1D, word: Sequence[int], allow_empty: bool = False) -> Cylinder:
    """Return X_I as the exact image of the hull under phi_I."""
    composed = compose_word(ifs, word, allow_empty=allow_empty)
    return Cylinder(tuple(word), composed.image(ifs.hull))


def iter_level_maps(
    ifs: Ifs1D,
    n: int,
    budget: int = DEFAULT_WORD_BUDGET,
    prefix: Word = (),
) -> Iterator[Tuple[Word, Map]]:
    """
    Yield (word, phi_word) for every word of length n extending `prefix`.

    Depth-first in lexicographic order; each child map is the parent map
    composed with one digit.
    """
    if n < 1:
        raise ValidationError(f"level must be positive, got {n}", "n")
    prefix = ifs.check_word(prefix)
    if len(prefix) > n:
        return
    check_budget(ifs.size ** (n - len(prefix)), budget)
    root = compose_word(ifs, prefix, allow_empty=True)
    stack: List[Tuple[Word, Map]] = [(prefix, root)]
    while stack:
        word, composed = stack.pop()
        if len(word) == n:
            yield word, composed
            continue
        for digit in reversed(ifs.digits):
            stack.append((word + (digit,), composed.compose(ifs.map_for(digit))))


def enumerate_level(
    ifs: Ifs1D,
    n: int,
    budget: int = DEFAULT_WORD_BUDGET,
    prefix: Word = (),
) -> Iterator[Cylinder]:
    """Stream the |D|^n cylinders of level n in lexicographic order."""
    logger.debug(f"Enumerating level {n} of {ifs.name} ({ifs.size ** n} words)")
    for word, composed in iter_level_maps(ifs, n, budget, prefix):
        yield Cylinder(word, composed.image(ifs.hull))


def point_of_coding(ifs: Ifs1D, coding: Sequence[int], depth: int) -> Tuple[Fraction, Fraction]:
    """
    Approximate the point with the given coding.

    Returns:
        (midpoint of the depth-cylinder, half its diameter)
    """
    if depth > len(coding):
        raise ValidationError(
            f"depth {depth} exceeds coding length {len(coding)}", "depth"
        )
    cylinder = cylinder_of(ifs, tuple(coding[:depth]), allow_empty=True)
    return cylinder.midpoint, cylinder.diameter / 2


def check_separation(ifs: Ifs1D) -> SeparationReport:
    """
    Test level-1 hull images for disjointness.

    Disjoint closed images certify SSC; images meeting only at endpoints
    certify OSC with the hull interior as open set. Anything else is
    reported as overlapping and inconclusive.
    """
    images = sorted(
        (m.image(ifs.hull), digit) for digit, m in enumerate(ifs.maps, start=1)
    )
    touching = None
    overlap = None
    min_gap = None
    reach, reach_digit = images[0][0][1], images[0][1]
    for (lo, hi), digit in images[1:]:
        if lo < reach:
            overlap = overlap or tuple(sorted((reach_digit, digit)))
        elif lo == reach:
            touching = touching or tuple(sorted((reach_digit, digit)))
        elif min_gap is None or lo - reach < min_gap[1][1] - min_gap[1][0]:
            min_gap = (tuple(sorted((reach_digit, digit))), (reach, lo))
        if hi > reach:
            reach, reach_digit = hi, digit

    if overlap is not None:
        logger.warning(f"{ifs.name}: level-1 images overlap at digits {overlap}; separation inconclusive")
        return SeparationReport("overlapping", certified=False, witness=overlap)
    if touching is not None:
        return SeparationReport("OSC", certified=True, witness=touching)
    witness, gap = min_gap if min_gap else (None, None)
    return SeparationReport("SSC", certified=True, witness=witness, gap=gap)


def hull_is_tight(ifs: Ifs1D) -> bool:
    """True when the level-1 images reach both hull endpoints."""
    images = [m.image(ifs.hull) for m in ifs.maps]
    return (min(lo for lo, _ in images) == ifs.hull[0]
            and max(hi for _, hi in images) == ifs.hull[1])


def fixed_point(m: Map) -> Union[Fraction, QuadraticIrrational]:
    """
    Exact fixed point of a contraction.

    Similarities always have a rational fixed point. For Moebius maps the
    attracting root of c*x^2 + (d-a)*x - b is returned, as a Fraction when
    rational and as a QuadraticIrrational otherwise.
    """
    if isinstance(m, SimilarityMap):
        return m.translation / (1 - m.scale)
    if m.c == 0:
        return Fraction(m.b, m.d - m.a)
    a, b, c = m.c, m.d - m.a, -m.b
    disc = b * b - 4 * a * c
    if disc < 0:
        raise ValidationError(f"map {m} has no real fixed point", "maps")
    if isqrt(disc) ** 2 == disc:
        roots = [Fraction(-b + sign * isqrt(disc), 2 * a) for sign in (1, -1)]
        return max(roots, key=lambda r: abs(m.c * r + m.d))
    with mpmath.workdps(WORKING_DPS):
        roots = [(-b + sign * mpmath.sqrt(disc)) / (2 * a) for sign in (1, -1)]
        attracting = max(roots, key=lambda r: abs(m.c * r + m.d))
    return QuadraticIrrational.normalized(a, b, c, near=attracting)


@dataclass
class NaturalSampler:
    """
    I.i.d. block sampler standing in for the natural measure.

    Each block is a word (single digits for similarity systems); blocks are
    drawn with the given weights. Sample `index` uses its own generator
    seeded from (seed, index), so streams do not depend on scheduling.
    """
    weights: np.ndarray
    seed: int = 0
    blocks: Tuple[Word, ...] = ()
    chunk: int = 64
    block_length: int = field(init=False, default=1)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise ValidationError("weights must be a nonempty vector", "weights")
        if np.any(weights < 0) or not np.any(weights > 0):
            raise ValidationError("weights must be nonnegative with one positive entry", "weights")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {weights.sum()!r}, not 1", "weights")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative", "seed")
        self.weights = weights
        if not self.blocks:
            self.blocks = tuple((digit,) for digit in range(1, weights.size + 1))
        if len(self.blocks) != weights.size:
            raise ValidationError("one weight per block is required", "weights")
        self.block_length = len(self.blocks[0])

    @classmethod
    def from_weights(cls, weights: Sequence[float], seed: int = 0) -> 'NaturalSampler':
        """Digit sampler; weights are normalized to sum to one."""
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if total <= 0:
            raise ValidationError("weights must have a positive entry", "weights")
        return cls(weights / total, seed)

    def generator(self, index: int = 0) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, index]))

    def digits(self, index: int = 0) -> Iterator[int]:
        """Endless digit stream of sample `index`."""
        rng = self.generator(index)
        while True:
            for block in rng.choice(len(self.blocks), size=self.chunk, p=self.weights):
                yield from self.blocks[block]


def natural_sampler(
    ifs: Ifs1D,
    dimension: float,
    seed: int = 0,
    base_level: int = DEFAULT_BASE_LEVEL,
) -> NaturalSampler:
    """
    Sampler with p_i = r_i^dim for similarities, or block weights
    proportional to Diam(X_I)^dim over level `base_level` for Moebius systems.
    """
    if ifs.is_similarity:
        return NaturalSampler.from_weights([float(r) ** dimension for r in ifs.ratios], seed)
    cylinders = list(enumerate_level(ifs, base_level))
    weights = np.array([float(c.diameter) ** dimension for c in cylinders])
    return NaturalSampler(
        weights / weights.sum(),
        seed,
        blocks=tuple(c.word for c in cylinders),
    )


def sample_coding(sampler: NaturalSampler, length: int, index: int = 0) -> Word:
    """Draw the first `length` digits of sample `index`."""
    if length < 1:
        raise ValidationError(f"length must be at least 1, got {length}", "length")
    return tuple(itertools.islice(sampler.digits(index), length))


def periodic_coding(period: Sequence[int], length: int) -> Word:
    """The word period^infinity truncated to `length`."""
    return tuple(itertools.islice(itertools.cycle(period), length))
