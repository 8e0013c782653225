"""
Exact algebraic values of degree at most two and their heights.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Optional, Tuple, Union

import mpmath

from ..errors import InvariantViolation, ValidationError
from .ifs import Word, format_word

WORKING_DPS = 30


@dataclass(frozen=True)
class RationalPoint:
    """A reduced fraction p/q with q > 0; its height is q."""
    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValidationError("denominator must be positive", "point")
        if gcd(self.numerator, self.denominator) != 1:
            raise ValidationError(
                f"{self.numerator}/{self.denominator} is not reduced", "point"
            )

    @classmethod
    def from_fraction(cls, value: Union[Fraction, int, str]) -> 'RationalPoint':
        value = Fraction(value)
        return cls(value.numerator, value.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    @property
    def height(self) -> int:
        return self.denominator

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class QuadraticIrrational:
    """
    A real root of the irreducible polynomial a*x^2 + b*x + c.

    Coefficients have content 1 and a > 0; root is '+' or '-' and selects
    (-b + sqrt(D)) / 2a or (-b - sqrt(D)) / 2a.
    """
    a: int
    b: int
    c: int
    root: str = "+"

    def __post_init__(self):
        if self.root not in ("+", "-"):
            raise ValidationError(f"root selector must be '+' or '-', got {self.root!r}", "root")
        if self.a <= 0:
            raise ValidationError("leading coefficient must be positive", "a")
        if gcd(gcd(self.a, self.b), self.c) != 1:
            raise ValidationError("coefficients must have content 1", "coefficients")
        disc = self.discriminant
        if disc <= 0 or isqrt(disc) ** 2 == disc:
            raise ValidationError(
                f"discriminant {disc} must be positive and not a square", "coefficients"
            )

    @classmethod
    def normalized(cls, a: int, b: int, c: int, near) -> 'QuadraticIrrational':
        """
        Build from any nonzero multiple of a minimal polynomial.

        Divides out the content, makes the leading coefficient positive and
        picks the root nearest to the numeric value `near`.
        """
        if a == 0:
            raise InvariantViolation(f"polynomial {a},{b},{c} is not quadratic")
        g = gcd(gcd(a, b), c)
        sign = -1 if a < 0 else 1
        a, b, c = (sign * a // g, sign * b // g, sign * c // g)
        disc = b * b - 4 * a * c
        if disc <= 0 or isqrt(disc) ** 2 == disc:
            raise InvariantViolation(f"polynomial {a},{b},{c} is reducible over the rationals")
        plus = cls(a, b, c, "+")
        minus = cls(a, b, c, "-")
        with mpmath.workdps(WORKING_DPS):
            target = mpmath.mpf(near)
            if abs(plus.numeric() - target) <= abs(minus.numeric() - target):
                return plus
            return minus

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def height(self) -> int:
        return max(abs(self.a), abs(self.b), abs(self.c))

    @property
    def coefficients(self) -> Tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def numeric(self, dps: int = WORKING_DPS) -> mpmath.mpf:
        """Root value at `dps` significant digits, using the cancellation-free form."""
        with mpmath.workdps(dps + 10):
            root_disc = mpmath.sqrt(self.discriminant)
            sign = 1 if self.root == "+" else -1
            if self.b == 0:
                value = sign * root_disc / (2 * self.a)
            elif (self.b > 0) == (sign < 0):
                # -b and sign*sqrt(D) share a sign: no cancellation
                value = (-self.b + sign * root_disc) / (2 * self.a)
            else:
                q = -(self.b + sign * root_disc) / 2
                value = self.c / q
        with mpmath.workdps(dps):
            return +value

    def residual(self, value) -> mpmath.mpf:
        with mpmath.workdps(WORKING_DPS):
            v = mpmath.mpf(value)
            return abs(self.a * v * v + self.b * v + self.c)

    def polynomial_string(self) -> str:
        return f"{self.a},{self.b},{self.c}"

    def __str__(self) -> str:
        return f"root{self.root}({self.polynomial_string()})"


AlgebraicValue = Union[RationalPoint, QuadraticIrrational]


@dataclass
class HeightOrbitRecord:
    """Image of a start point under phi_I together with its height certificate."""
    word: Word
    value: AlgebraicValue
    height: int
    bound: int
    multiplicity: int = 1
    numeric: Optional[mpmath.mpf] = None

    def __post_init__(self):
        if self.height > self.bound:
            raise InvariantViolation(
                f"height {self.height} exceeds bound {self.bound} for word "
                f"({format_word(self.word)})"
            )

    @property
    def rank(self) -> int:
        return len(self.word)
