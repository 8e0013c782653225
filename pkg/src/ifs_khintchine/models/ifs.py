"""
Data models for one-dimensional iterated function systems.

Maps are exact: similarity parameters are Fractions and Moebius maps are
integer 2x2 matrices. Intervals are ordered (lo, hi) pairs of Fractions.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Any, Dict, List, Tuple, Union

from ..errors import ValidationError

Interval = Tuple[Fraction, Fraction]
Word = Tuple[int, ...]


def parse_fraction(value: Any, key: str) -> Fraction:
    """
    Parse an exact rational from an int or an integer-fraction string.

    Floats are rejected so that no input passes through binary floating point.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise ValidationError(
            f"expected an integer or an integer fraction such as '2/3', got {value!r}",
            key,
        )
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "." in text or "e" in text.lower():
            raise ValidationError(f"decimal values are not exact: {value!r}", key)
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"not a rational number: {value!r}", key)
    raise ValidationError(f"unsupported value {value!r}", key)


def parse_word(text: Union[str, List[int], Tuple[int, ...]], key: str = "word") -> Word:
    """Parse a word from '1,2,1', '121' or a list of ints."""
    if isinstance(text, (list, tuple)):
        digits = list(text)
    else:
        text = str(text).strip()
        if not text:
            return ()
        parts = text.split(",") if "," in text else list(text)
        try:
            digits = [int(part) for part in parts]
        except ValueError:
            raise ValidationError(f"not a digit word: {text!r}", key)
    if any(not isinstance(d, int) or d < 1 for d in digits):
        raise ValidationError(f"digits must be positive integers: {text!r}", key)
    return tuple(digits)


def format_word(word: Word) -> str:
    """Render a word as comma-separated digits."""
    return ",".join(str(d) for d in word)


@dataclass(frozen=True)
class SimilarityMap:
    """x -> sign * ratio * x + translation."""
    ratio: Fraction
    translation: Fraction
    sign: int = 1

    def __post_init__(self):
        if self.ratio <= 0:
            raise ValidationError(f"ratio must be positive, got {self.ratio}", "ratio")
        if self.sign not in (1, -1):
            raise ValidationError(f"sign must be 1 or -1, got {self.sign}", "sign")

    def __call__(self, x):
        return self.sign * self.ratio * x + self.translation

    @property
    def kind(self) -> str:
        return "similarity"

    @property
    def scale(self) -> Fraction:
        return self.sign * self.ratio

    @classmethod
    def identity(cls) -> 'SimilarityMap':
        return cls(Fraction(1), Fraction(0), 1)

    @classmethod
    def from_config(cls, data: Dict[str, Any], key: str = "maps") -> 'SimilarityMap':
        """Create a SimilarityMap from a config mapping."""
        if "ratio" not in data:
            raise ValidationError("similarity map needs 'ratio'", key)
        ratio = parse_fraction(data["ratio"], f"{key}.ratio")
        if not 0 < ratio < 1:
            raise ValidationError(f"ratio must lie in (0, 1), got {ratio}", f"{key}.ratio")
        sign = data.get("sign", 1)
        if sign not in (1, -1):
            raise ValidationError(f"sign must be 1 or -1, got {sign!r}", f"{key}.sign")
        return cls(
            ratio=ratio,
            translation=parse_fraction(data.get("translation", 0), f"{key}.translation"),
            sign=sign,
        )

    def compose(self, other: 'SimilarityMap') -> 'SimilarityMap':
        """Return self o other."""
        return SimilarityMap(
            ratio=self.ratio * other.ratio,
            translation=self.scale * other.translation + self.translation,
            sign=self.sign * other.sign,
        )

    def image(self, interval: Interval) -> Interval:
        a, b = self(interval[0]), self(interval[1])
        return (a, b) if a <= b else (b, a)

    def abs_derivative_bounds(self, interval: Interval) -> Tuple[Fraction, Fraction]:
        return self.ratio, self.ratio

    def canonical_key(self) -> Tuple:
        return ("similarity", self.scale, self.translation)

    def to_dict(self) -> Dict[str, str]:
        return {
            "ratio": str(self.ratio),
            "translation": str(self.translation),
            "sign": self.sign,
        }


@dataclass(frozen=True)
class MoebiusMap:
    """x -> (a*x + b) / (c*x + d) with integer entries and ad - bc = +-1."""
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if abs(self.determinant) != 1:
            raise ValidationError(
                f"Moebius map needs ad - bc = +-1, got {self.determinant}", "maps"
            )

    def __call__(self, x):
        return (self.a * x + self.b) / (self.c * x + self.d)

    @property
    def kind(self) -> str:
        return "moebius"

    @property
    def determinant(self) -> int:
        return self.a * self.d - self.b * self.c

    @classmethod
    def identity(cls) -> 'MoebiusMap':
        return cls(1, 0, 0, 1)

    @classmethod
    def from_config(cls, data: Dict[str, Any], key: str = "maps") -> 'MoebiusMap':
        """Create a MoebiusMap from a config mapping of integer entries."""
        entries = []
        for name in ("a", "b", "c", "d"):
            value = data.get(name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"integer entry required, got {value!r}", f"{key}.{name}")
            entries.append(value)
        return cls(*entries)

    def compose(self, other: 'MoebiusMap') -> 'MoebiusMap':
        """Return self o other (the matrix product, reduced by its gcd)."""
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        g = gcd(gcd(a, b), gcd(c, d)) or 1
        return MoebiusMap(a // g, b // g, c // g, d // g)

    def pole(self):
        """Return the pole -d/c, or None for affine maps."""
        if self.c == 0:
            return None
        return Fraction(-self.d, self.c)

    def has_pole_in(self, interval: Interval) -> bool:
        pole = self.pole()
        return pole is not None and interval[0] <= pole <= interval[1]

    def image(self, interval: Interval) -> Interval:
        if self.has_pole_in(interval):
            raise ValidationError(f"pole {self.pole()} lies inside {interval}", "hull")
        a, b = self(Fraction(interval[0])), self(Fraction(interval[1]))
        return (a, b) if a <= b else (b, a)

    def abs_derivative(self, x: Fraction) -> Fraction:
        return Fraction(abs(self.determinant)) / (self.c * x + self.d) ** 2

    def abs_derivative_bounds(self, interval: Interval) -> Tuple[Fraction, Fraction]:
        """
        Extremes of |phi'| over a pole-free interval.

        |phi'| = 1/(cx+d)^2 is monotone away from the pole, so the endpoint
        values are the exact extremes.
        """
        if self.has_pole_in(interval):
            raise ValidationError(f"pole {self.pole()} lies inside {interval}", "hull")
        lo = self.abs_derivative(Fraction(interval[0]))
        hi = self.abs_derivative(Fraction(interval[1]))
        return (lo, hi) if lo <= hi else (hi, lo)

    def canonical_key(self) -> Tuple:
        entries = (self.a, self.b, self.c, self.d)
        lead = next(e for e in entries if e != 0)
        if lead < 0:
            entries = tuple(-e for e in entries)
        return ("moebius",) + entries

    def to_dict(self) -> Dict[str, int]:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


Map = Union[SimilarityMap, MoebiusMap]

MAP_KINDS = {
    "similarity": SimilarityMap,
    "moebius": MoebiusMap,
}


@dataclass(frozen=True)
class Ifs1D:
    """A finite IFS on the line with digits labelled 1..m."""
    maps: Tuple[Map, ...]
    hull: Interval
    name: str = "inline"

    def __post_init__(self):
        if len(self.maps) < 2:
            raise ValidationError("an IFS needs at least two maps", "maps")
        kinds = {m.kind for m in self.maps}
        if len(kinds) != 1:
            raise ValidationError(f"maps must share one kind, got {sorted(kinds)}", "maps")
        lo, hi = self.hull
        if not lo < hi:
            raise ValidationError(f"hull must satisfy lo < hi, got {self.hull}", "hull")
        for digit, m in enumerate(self.maps, start=1):
            img_lo, img_hi = m.image(self.hull)
            if img_lo < lo or img_hi > hi:
                raise ValidationError(
                    f"map {digit} sends the hull outside itself: [{img_lo}, {img_hi}]",
                    "hull",
                )

    @property
    def kind(self) -> str:
        return self.maps[0].kind

    @property
    def is_similarity(self) -> bool:
        return self.kind == "similarity"

    @property
    def size(self) -> int:
        return len(self.maps)

    @property
    def digits(self) -> range:
        return range(1, len(self.maps) + 1)

    @property
    def hull_diameter(self) -> Fraction:
        return self.hull[1] - self.hull[0]

    @property
    def ratios(self) -> List[Fraction]:
        if not self.is_similarity:
            raise ValidationError(f"{self.name} is not a similarity system", "ifs")
        return [m.ratio for m in self.maps]

    @property
    def is_contracting(self) -> bool:
        """True when every map has sup |phi'| < 1 on the hull."""
        return all(m.abs_derivative_bounds(self.hull)[1] < 1 for m in self.maps)

    def map_for(self, digit: int) -> Map:
        if not 1 <= digit <= len(self.maps):
            raise ValidationError(
                f"digit {digit} outside D = {{1..{len(self.maps)}}}", "word"
            )
        return self.maps[digit - 1]

    def check_word(self, word: Word) -> Word:
        for digit in word:
            self.map_for(digit)
        return tuple(word)

    @classmethod
    def from_config(cls, data: Dict[str, Any], name: str = "inline") -> 'Ifs1D':
        """
        Create an Ifs1D from an inline config section.

        Args:
            data: Mapping with 'kind', 'maps' and 'hull' keys
            name: Label used in reports

        Returns:
            Validated Ifs1D instance
        """
        if not isinstance(data, dict):
            raise ValidationError("inline IFS must be a mapping", "ifs")
        kind = data.get("kind", "similarity")
        map_class = MAP_KINDS.get(kind)
        if map_class is None:
            raise ValidationError(
                f"unknown kind {kind!r}, expected one of {', '.join(MAP_KINDS)}", "ifs.kind"
            )
        raw_maps = data.get("maps")
        if not isinstance(raw_maps, list) or not raw_maps:
            raise ValidationError("a nonempty list of maps is required", "ifs.maps")
        maps = tuple(
            map_class.from_config(entry, f"ifs.maps[{index}]")
            for index, entry in enumerate(raw_maps)
        )
        hull = data.get("hull", ["0", "1"])
        if not isinstance(hull, list) or len(hull) != 2:
            raise ValidationError("hull must be a two-element list", "ifs.hull")
        hull_interval = (
            parse_fraction(hull[0], "ifs.hull[0]"),
            parse_fraction(hull[1], "ifs.hull[1]"),
        )
        return cls(maps=maps, hull=hull_interval, name=name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "maps": [m.to_dict() for m in self.maps],
            "hull": [str(self.hull[0]), str(self.hull[1])],
        }


@dataclass(frozen=True)
class Cylinder:
    """The image of the hull under phi_I."""
    word: Word
    interval: Interval

    @property
    def lo(self) -> Fraction:
        return self.interval[0]

    @property
    def hi(self) -> Fraction:
        return self.interval[1]

    @property
    def diameter(self) -> Fraction:
        return self.interval[1] - self.interval[0]

    @property
    def midpoint(self) -> Fraction:
        return (self.interval[0] + self.interval[1]) / 2

    @property
    def rank(self) -> int:
        return len(self.word)

    def contains(self, other: 'Cylinder') -> bool:
        return self.lo <= other.lo and other.hi <= self.hi
