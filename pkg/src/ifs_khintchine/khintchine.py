"""
Khintchine-type sums, cylinder targets and limsup hit experiments.

Psi(I) = Diam(X_I)^exponent_ratio * theta(|I|), or theta(|I|) alone when the
diameter bypass is on.
"""

import ast
import logging
import math
from functools import lru_cache
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from sympy.parsing.sympy_parser import parse_expr
from tqdm import tqdm

from .errors import InvariantViolation, PrecisionError, ValidationError
from .ifs_core import (
    DEFAULT_WORD_BUDGET,
    NaturalSampler,
    check_budget,
    compose_word,
    cylinder_of,
    fixed_point,
    iter_level_maps,
    periodic_coding,
)
from .models.ifs import Cylinder, Ifs1D, Interval, Map, Word, format_word, parse_word
from .models.results import HitStatistics, TargetBall

logger = logging.getLogger(__name__)

# certified point and centre errors must stay below this share of a radius
PRECISION_SHARE = Fraction(1, 1000)

THETA_FAMILIES = ("power", "constant", "geometric", "table", "expr")

# Names an expr: theta may use besides n
_EXPR_FUNCTIONS = {
    "exp": sympy.exp,
    "log": sympy.log,
    "log2": lambda x: sympy.log(x, 2),
    "log10": lambda x: sympy.log(x, 10),
    "sqrt": sympy.sqrt,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "tan": sympy.tan,
    "atan": sympy.atan,
    "floor": sympy.floor,
    "ceil": sympy.ceiling,
}
_EXPR_CONSTANTS = {"pi": sympy.pi, "e": sympy.E}
_EXPR_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.UAdd, ast.USub,
)
_N = sympy.Symbol("n", positive=True, integer=True)


def _check_expression(tree: ast.AST, expression: str) -> None:
    """Reject every node outside arithmetic on n, numbers and the listed functions."""
    for node in ast.walk(tree):
        if not isinstance(node, _EXPR_NODES):
            raise ValidationError(
                f"{type(node).__name__} is not allowed in expression {expression!r}", "theta"
            )
        if isinstance(node, ast.Constant) and (
            isinstance(node.value, bool) or not isinstance(node.value, (int, float))
        ):
            raise ValidationError(f"only numeric literals are allowed in {expression!r}", "theta")
        if isinstance(node, ast.Name) and node.id != "n" and node.id not in _EXPR_CONSTANTS \
                and node.id not in _EXPR_FUNCTIONS:
            raise ValidationError(f"unknown name {node.id!r} in {expression!r}", "theta")
        if isinstance(node, ast.Call) and (
            not isinstance(node.func, ast.Name)
            or node.func.id not in _EXPR_FUNCTIONS
            or node.keywords
        ):
            raise ValidationError(f"only plain calls of {', '.join(_EXPR_FUNCTIONS)} are "
                                  f"allowed in {expression!r}", "theta")


@lru_cache(maxsize=None)
def _compile_expression(expression: str) -> Callable:
    """theta as a numpy-vectorised function of n."""
    try:
        tree = ast.parse(expression, mode="eval")
    except SyntaxError as e:
        raise ValidationError(f"cannot parse expression {expression!r}: {e.msg}", "theta")
    _check_expression(tree, expression)
    names = {"n": _N, **_EXPR_FUNCTIONS, **_EXPR_CONSTANTS}
    try:
        parsed = parse_expr(expression, local_dict=names)
    except (sympy.SympifyError, TypeError, ValueError) as e:
        raise ValidationError(f"cannot evaluate expression {expression!r}: {e}", "theta")
    if parsed.free_symbols - {_N}:
        raise ValidationError(f"expression {expression!r} depends on more than n", "theta")
    return sympy.lambdify(_N, parsed, modules="numpy")


def _parse_params(text: str, family: str) -> Tuple[Fraction, ...]:
    try:
        return tuple(Fraction(part.strip()) for part in text.split(",") if part.strip())
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"bad parameters for {family}: {text!r}", "theta")


@dataclass(frozen=True)
class ApproxFunction:
    """
    theta from one of the families power:c,e (c*n^e), constant:c,
    geometric:c,q (c*q^n), table:v1,v2,... (last value repeats) or
    expr:<expression in n>.
    """
    family: str
    params: Tuple[Fraction, ...] = ()
    expression: Optional[str] = None
    exponent_ratio: float = 1.0
    ignore_diameter: bool = False
    scale: Fraction = Fraction(1)

    def __post_init__(self):
        if self.family not in THETA_FAMILIES:
            raise ValidationError(
                f"unknown theta family {self.family!r}, expected one of {', '.join(THETA_FAMILIES)}",
                "theta",
            )
        expected = {"power": 2, "constant": 1, "geometric": 2}.get(self.family)
        if expected is not None and len(self.params) != expected:
            raise ValidationError(
                f"{self.family} takes {expected} parameters, got {len(self.params)}", "theta"
            )
        if self.family == "table" and not self.params:
            raise ValidationError("table needs at least one value", "theta")
        if self.family == "expr" and not self.expression:
            raise ValidationError("expr needs an expression in n", "theta")
        if self.family == "expr":
            _compile_expression(self.expression)
        if self.family != "expr" and self.family != "power" and any(p < 0 for p in self.params):
            raise ValidationError("theta parameters must be nonnegative", "theta")
        if self.family == "power" and self.params[0] < 0:
            raise ValidationError("power coefficient must be nonnegative", "theta")
        if self.exponent_ratio < 1:
            raise ValidationError(
                f"exponent ratio must be at least 1, got {self.exponent_ratio}", "exponent_ratio"
            )
        if self.scale < 0:
            raise ValidationError("scale must be nonnegative", "scale")

    @classmethod
    def parse(cls, text: str, exponent_ratio: float = 1.0,
              ignore_diameter: bool = False) -> 'ApproxFunction':
        """Parse 'family:params', e.g. 'power:1,-1.5849625' or 'expr:2**-n'."""
        family, _, rest = str(text).partition(":")
        family = family.strip().lower()
        if family == "expr":
            return cls("expr", (), rest.strip(), exponent_ratio, ignore_diameter)
        return cls(family, _parse_params(rest, family), None, exponent_ratio, ignore_diameter)

    def theta(self, n: int) -> Union[Fraction, float]:
        """theta(n); exact Fraction where the family allows it."""
        if n < 1:
            raise ValidationError(f"rank must be positive, got {n}", "rank")
        if self.family == "constant":
            value = self.params[0]
        elif self.family == "geometric":
            value = self.params[0] * self.params[1] ** n
        elif self.family == "table":
            value = self.params[min(n, len(self.params)) - 1]
        elif self.family == "power":
            c, e = self.params
            value = c * Fraction(n) ** int(e) if e.denominator == 1 else float(c) * n ** float(e)
        else:
            value = float(self._compiled()(float(n)))
            if value < 0:
                raise ValidationError(f"theta({n}) = {value} is negative", "theta")
        return value

    def _compiled(self) -> Callable:
        return _compile_expression(self.expression)

    def theta_array(self, ns: np.ndarray) -> np.ndarray:
        """Vectorised float theta over an integer array."""
        ns = np.asarray(ns, dtype=float)
        if self.family == "constant":
            return np.full(ns.shape, float(self.params[0]))
        if self.family == "power":
            return float(self.params[0]) * ns ** float(self.params[1])
        if self.family == "geometric":
            return float(self.params[0]) * float(self.params[1]) ** ns
        if self.family == "table":
            values = np.array([float(v) for v in self.params])
            return values[np.minimum(ns.astype(int), len(values)) - 1]
        values = np.asarray(self._compiled()(ns), dtype=float)
        return np.broadcast_to(values, ns.shape).copy()

    def log_theta_array(self, ns: np.ndarray) -> np.ndarray:
        """log theta without underflow for the closed-form families."""
        ns = np.asarray(ns, dtype=float)
        with np.errstate(divide="ignore"):
            if self.family == "power":
                return np.log(float(self.params[0])) + float(self.params[1]) * np.log(ns)
            if self.family == "geometric":
                return np.log(float(self.params[0])) + ns * np.log(float(self.params[1]))
            return np.log(self.theta_array(ns))

    @property
    def is_monotone_decreasing(self) -> bool:
        if self.family == "constant":
            return True
        if self.family == "power":
            return self.params[1] <= 0 or self.params[0] == 0
        if self.family == "geometric":
            return self.params[1] <= 1 or self.params[0] == 0
        if self.family == "table":
            return all(a >= b for a, b in zip(self.params, self.params[1:]))
        return False

    def radius(self, diameter, rank: int):
        """Psi for a cylinder of the given diameter and rank."""
        theta = self.theta(rank)
        if self.ignore_diameter:
            return self.scale * theta
        if self.exponent_ratio == 1:
            return self.scale * diameter * theta
        return float(self.scale) * float(diameter) ** self.exponent_ratio * float(theta)

    def suffix_maxima(self, first: int, last: int) -> np.ndarray:
        """m[d] = max theta(n) over n in [max(d, first), last], for d = 0..last+1."""
        maxima = np.zeros(last + 2)
        if last < first:
            return maxima
        values = self.theta_array(np.arange(first, last + 1)) * float(self.scale)
        running = np.maximum.accumulate(values[::-1])[::-1]
        maxima[first:last + 1] = running
        maxima[:first] = running[0]
        return maxima

    def scaled(self, factor) -> 'ApproxFunction':
        """The same rule with every radius multiplied by `factor`."""
        return replace(self, scale=self.scale * Fraction(factor))

    def describe(self) -> str:
        body = self.expression if self.family == "expr" else ",".join(str(p) for p in self.params)
        text = f"{self.family}:{body}"
        if self.ignore_diameter:
            text += " (diameter ignored)"
        elif self.exponent_ratio != 1:
            text += f" (exponent ratio {self.exponent_ratio:.12g})"
        return text


def psi_of(af: ApproxFunction, cyl: Cylinder):
    """Radius Psi(I) for the cylinder X_I."""
    return af.radius(cyl.diameter, cyl.rank)


@dataclass(frozen=True)
class ZPoint:
    """The point z through a coding, with its exact value when known."""
    coding: Word
    exact: Optional[Fraction] = None
    label: str = ""

    @classmethod
    def parse(cls, text: str, ifs: Ifs1D, length: int) -> 'ZPoint':
        """
        Parse 'fixpoint:<digit>', 'periodic:<digits>' or a literal digit word.

        Fixed points of similarity maps are exact, so their ball centres are too.
        """
        text = str(text).strip()
        if text.startswith("fixpoint:"):
            digit = int(text.split(":", 1)[1])
            m = ifs.map_for(digit)
            exact = fixed_point(m) if ifs.is_similarity else None
            return cls((digit,) * length, exact, text)
        if text.startswith("periodic:"):
            period = ifs.check_word(parse_word(text.split(":", 1)[1], "z"))
            if not period:
                raise ValidationError("empty period", "z")
            return cls(periodic_coding(period, length), None, text)
        return cls(ifs.check_word(parse_word(text, "z")), None, text)


class CenterCache:
    """Ball centres phi_I(z) to a requested precision."""

    def __init__(self, ifs: Ifs1D, z: ZPoint):
        self.ifs = ifs
        self.z = z
        self._intervals: List[Interval] = [ifs.hull]
        self._depth_hint: Dict[int, int] = {}
        if z.exact is None:
            composed = compose_word(ifs, (), allow_empty=True)
            for digit in z.coding:
                composed = composed.compose(ifs.map_for(digit))
                self._intervals.append(composed.image(ifs.hull))

    def center(self, composed: Map, rank: int, error) -> Tuple[Fraction, Fraction]:
        """(centre approximation, certified error <= error)."""
        if self.z.exact is not None:
            return composed(self.z.exact), Fraction(0)
        depth = self._depth_hint.get(rank, 0)
        while True:
            lo, hi = composed.image(self._intervals[depth])
            half = (hi - lo) / 2
            if half <= error:
                self._depth_hint[rank] = depth
                return (lo + hi) / 2, half
            depth += 1
            if depth >= len(self._intervals):
                raise PrecisionError(
                    f"z coding of length {len(self.z.coding)} cannot place ball centres at "
                    f"rank {rank} within {float(error):.3g}; use a deeper z coding"
                )


class SamplePoint:
    """A sample x with a lazily deepened coding."""

    def __init__(self, ifs: Ifs1D, digits: Iterator[int], prefix: Word = (), max_depth: int = 256):
        self.ifs = ifs
        self._digits = digits
        self.word = list(prefix)
        self.max_depth = max_depth
        self._map = compose_word(ifs, prefix, allow_empty=True)
        self._update()

    def _update(self) -> None:
        lo, hi = self._map.image(self.ifs.hull)
        self.value = (lo + hi) / 2
        self.error = (hi - lo) / 2

    def refine(self, error) -> None:
        """Deepen until the certified error is at most `error`."""
        while self.error > error:
            if len(self.word) >= self.max_depth:
                raise PrecisionError(
                    f"sample needs more than {self.max_depth} digits to reach error "
                    f"{float(error):.3g}; raise the depth budget"
                )
            digit = next(self._digits)
            self.word.append(digit)
            self._map = self._map.compose(self.ifs.map_for(digit))
            self._update()


def _center_enclosure(ifs: Ifs1D, composed: Map, rest: Sequence[int]) -> Interval:
    for digit in rest:
        composed = composed.compose(ifs.map_for(digit))
    return composed.image(ifs.hull)


def within_ball(interval: Interval, center: Interval, radius) -> bool:
    """
    Whether `interval` lies in B(c, radius) for every c in the `center`
    enclosure, i.e. no point of it is farther than radius from any such c.
    """
    lo, hi = interval
    c_lo, c_hi = center
    return hi - c_lo <= radius and c_hi - lo <= radius


@dataclass
class TargetCylinder:
    """X_{I,theta}: the first extension I z_1..z_N shorter than Diam(X_I) theta(|I|)."""
    word: Word
    extension: int
    cylinder: Cylinder
    threshold: Any


def target_cylinder(ifs: Ifs1D, word: Word, z_coding: Sequence[int],
                    af: ApproxFunction) -> TargetCylinder:
    """
    Smallest N with Diam(X_{I z_1..z_N}) < Diam(X_I) * theta(|I|).

    The resulting cylinder lies inside X_I and inside the closed ball
    B(phi_I(z), Diam(X_I) theta(|I|)). phi_I(z) is enclosed by the image of
    the hull under the whole of I z, and the ball test holds for every
    point of that enclosure, so both containments are exact.
    """
    word = ifs.check_word(word)
    z_coding = ifs.check_word(z_coding)
    base = cylinder_of(ifs, word)
    theta = af.theta(len(word))
    if theta <= 0:
        raise ValidationError(f"theta({len(word)}) must be positive", "theta")
    threshold = base.diameter * (theta if isinstance(theta, Fraction) else Fraction(theta))
    composed = compose_word(ifs, word)
    for n, digit in enumerate(z_coding, start=1):
        composed = composed.compose(ifs.map_for(digit))
        cyl = Cylinder(word + tuple(z_coding[:n]), composed.image(ifs.hull))
        if cyl.diameter < threshold:
            if not base.contains(cyl):
                raise InvariantViolation(f"X_I,theta for ({format_word(word)}) escapes X_I")
            if not within_ball(cyl.interval, _center_enclosure(ifs, composed, z_coding[n:]),
                               threshold):
                raise InvariantViolation(
                    f"X_I,theta for ({format_word(word)}) escapes its target ball"
                )
            return TargetCylinder(word, n, cyl, threshold)
    last = Cylinder(word + tuple(z_coding), composed.image(ifs.hull)) if z_coding else base
    shrink = (float(last.diameter) / float(base.diameter)) ** (1 / max(len(z_coding), 1))
    if len(z_coding) and shrink < 1:
        needed = math.ceil(math.log(float(threshold) / float(base.diameter)) / math.log(shrink))
    else:
        needed = len(z_coding) + 1
    raise ValidationError(
        f"z coding of length {len(z_coding)} is exhausted; about {needed} digits are required",
        "z",
    )


def union_measure_1d(balls: Iterable[Union[TargetBall, Tuple[Any, Any]]]):
    """Exact length of a finite union of closed intervals (sort and merge)."""
    intervals = sorted(b.interval if isinstance(b, TargetBall) else tuple(b) for b in balls)
    total = 0
    current_lo = current_hi = None
    for lo, hi in intervals:
        if current_hi is None or lo > current_hi:
            if current_hi is not None:
                total += current_hi - current_lo
            current_lo, current_hi = lo, hi
        elif hi > current_hi:
            current_hi = hi
    if current_hi is not None:
        total += current_hi - current_lo
    return total


def level_log_power_sums(
    ifs: Ifs1D,
    q: float,
    n_max: int,
    prefix: Word = (),
    budget: int = DEFAULT_WORD_BUDGET,
) -> np.ndarray:
    """
    L[n] = log sum over I in D^n extending `prefix` of Diam(X_I)^q, n = 0..n_max.

    Closed form for similarity systems; depth-first accumulation otherwise.
    Levels shorter than the prefix hold -inf.
    """
    prefix = ifs.check_word(prefix)
    sums = np.full(n_max + 1, -np.inf)
    if len(prefix) > n_max:
        return sums
    ns = np.arange(len(prefix), n_max + 1)
    if ifs.is_similarity:
        log_ratios = np.array([math.log(r.numerator) - math.log(r.denominator) for r in ifs.ratios])
        log_prefix = sum(log_ratios[d - 1] for d in prefix)
        log_step = float(np.log(np.sum(np.exp(q * log_ratios))))
        log_hull = math.log(float(ifs.hull_diameter))
        sums[len(prefix):] = q * (log_hull + log_prefix) + (ns - len(prefix)) * log_step
        return sums
    check_budget(ifs.size ** (n_max - len(prefix)), budget)
    totals = np.zeros(n_max + 1)
    stack = [(len(prefix), compose_word(ifs, prefix, allow_empty=True))]
    while stack:
        depth, composed = stack.pop()
        lo, hi = composed.image(ifs.hull)
        totals[depth] += float(hi - lo) ** q
        if depth < n_max:
            for digit in ifs.digits:
                stack.append((depth + 1, composed.compose(ifs.map_for(digit))))
    with np.errstate(divide="ignore"):
        sums[len(prefix):] = np.log(totals[len(prefix):])
    return sums


def _log_level_terms(ifs: Ifs1D, af: ApproxFunction, s: float, first: int, last: int,
                     prefix: Word, budget: int) -> np.ndarray:
    """log sum_{I in D^n} Psi(I)^s for n = first..last."""
    ns = np.arange(first, last + 1)
    log_theta = af.log_theta_array(ns) + math.log(float(af.scale)) if af.scale else np.full(ns.shape, -np.inf)
    if af.ignore_diameter:
        counts = np.where(ns >= len(prefix), (ns - len(prefix)) * math.log(ifs.size), -np.inf)
        return s * log_theta + counts
    levels = level_log_power_sums(ifs, af.exponent_ratio * s, last, prefix, budget)
    return s * log_theta + levels[first:last + 1]


def divergence_partial_sums(
    ifs: Ifs1D,
    af: ApproxFunction,
    dim_h: float,
    n: int,
    prefix: Word = (),
    budget: int = DEFAULT_WORD_BUDGET,
) -> np.ndarray:
    """
    S_1..S_n with S_N = sum_{m<=N} sum_{I in D^m} Psi(I)^dim_h.

    Similarity systems use the closed-form level sums, so n may be large.
    """
    if n < 1:
        raise ValidationError(f"N must be positive, got {n}", "ranks")
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.exp(_log_level_terms(ifs, af, dim_h, 1, n, prefix, budget))
    terms = np.nan_to_num(terms, nan=0.0)
    return np.cumsum(terms)


def convergence_cover_sum(
    ifs: Ifs1D,
    af: ApproxFunction,
    s: Union[float, Fraction],
    first: int,
    last: int,
    prefix: Word = (),
    budget: int = DEFAULT_WORD_BUDGET,
):
    """
    sum_{n=first}^{last} sum_{I in D^n} (2 Psi(I))^s.

    Exact Fraction for similarity systems with an exact theta, a unit
    exponent ratio and an integer s; a float computed in log space otherwise.
    """
    if first < 1 or last < first:
        raise ValidationError(f"bad rank range [{first}, {last}]", "ranks")
    prefix = ifs.check_word(prefix)
    exact_theta = isinstance(af.theta(first), Fraction)
    integer_s = Fraction(s).denominator == 1 and s >= 0
    if ifs.is_similarity and exact_theta and integer_s and (af.ignore_diameter or af.exponent_ratio == 1):
        return _exact_cover_sum(ifs, af, int(s), first, last, prefix)
    with np.errstate(over="ignore"):
        terms = np.exp(float(s) * math.log(2) + _log_level_terms(
            ifs, af, float(s), first, last, prefix, budget))
    return float(np.sum(terms))


def _exact_cover_sum(ifs: Ifs1D, af: ApproxFunction, s: int, first: int, last: int,
                     prefix: Word) -> Fraction:
    ratios = ifs.ratios
    step = sum(r ** s for r in ratios)
    prefix_scale = Fraction(1)
    for digit in prefix:
        prefix_scale *= ratios[digit - 1]
    total = Fraction(0)
    for n in range(max(first, len(prefix)), last + 1):
        theta = af.theta(n)
        if af.ignore_diameter:
            level = Fraction(ifs.size) ** (n - len(prefix))
        else:
            level = (ifs.hull_diameter * prefix_scale) ** s * step ** (n - len(prefix))
        total += (2 * af.scale * theta) ** s * level
    return total


@dataclass
class DuffinSchaefferReport:
    """Running A_Q / B_Q with the verdicts drawn from it."""
    ratios: np.ndarray
    reference_q: int
    clamped: int
    series_diverges: bool

    @property
    def max_ratio(self) -> float:
        return float(np.nanmax(self.ratios))

    @property
    def reference_ratio(self) -> float:
        return float(self.ratios[self.reference_q - 1])

    @property
    def final_ratio(self) -> float:
        return float(self.ratios[-1])

    @property
    def bounded(self) -> bool:
        """
        True when no ratio from the reference Q on exceeds ten times the ratio
        at the reference Q. A ratio that only decays is bounded.
        """
        late = self.ratios[self.reference_q - 1:]
        if np.all(np.isnan(late)):
            return False
        peak = float(np.nanmax(late))
        return peak == 0.0 or peak < 10 * self.reference_ratio


def dufschaeffer_ratio(af: ApproxFunction, dim_h: float, q_max: int,
                       reference_q: int = 1000) -> DuffinSchaefferReport:
    """
    A_Q / B_Q for Q <= q_max, where A_Q = sum theta^d log(1/theta) and
    B_Q = (sum theta^d)^2.

    Terms with theta(n) >= 1 contribute 0 to A_Q and are counted as clamped.
    """
    if dim_h <= 0:
        raise ValidationError(f"dim_H must be positive, got {dim_h}", "dim_h")
    if q_max < 1:
        raise ValidationError(f"Q must be positive, got {q_max}", "q_max")
    ns = np.arange(1, q_max + 1)
    theta = af.theta_array(ns) * float(af.scale)
    clamped = int(np.sum(theta >= 1))
    if clamped:
        logger.warning(f"theta(n) >= 1 at {clamped} ranks; log terms clamped to 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        powered = np.where(theta > 0, theta ** dim_h, 0.0)
        logs = np.where((theta > 0) & (theta < 1), -np.log(np.where(theta > 0, theta, 1.0)), 0.0)
        a = np.cumsum(powered * logs)
        b = np.cumsum(powered) ** 2
        ratios = np.where(b > 0, a / np.where(b > 0, b, 1.0), np.nan)
    partial = np.cumsum(powered)
    half = partial[q_max // 2 - 1] if q_max >= 2 else 0.0
    series_diverges = bool(partial[-1] - half > 1e-3 * max(partial[-1], 1e-300))
    return DuffinSchaefferReport(
        ratios=ratios,
        reference_q=min(reference_q, q_max),
        clamped=clamped,
        series_diverges=series_diverges,
    )


def limsup_hit_experiment(
    ifs: Ifs1D,
    z: Union[ZPoint, Sequence[int]],
    af: ApproxFunction,
    n_ranks: int,
    samples: int,
    k_min: int,
    sampler: NaturalSampler,
    dim_h: Optional[float] = None,
    min_rank: int = 1,
    prefix: Word = (),
    measure_budget: int = 2 ** 12,
    max_depth: int = 256,
    progress: bool = True,
) -> HitStatistics:
    """
    Count, per sample, the distinct ranks n in [min_rank, n_ranks] at which the
    sample lies in some ball B(phi_I(z), Psi(I)) with I in D^n extending `prefix`.

    Samples are the sampler's streams placed inside X_prefix. Each sample is
    processed by one depth-first pass over the word tree, pruning subtrees
    whose cylinders lie farther from the sample than any radius they can carry.

    Args:
        ifs: The system
        z: Ball centre coding (or ZPoint)
        af: Radius rule
        n_ranks: Largest rank N
        samples: Number of samples
        k_min: Report k-hitter fractions for k = 1..k_min
        sampler: Digit stream source
        dim_h: Exponent for the partial sums S_N (skipped when None)
        min_rank: Smallest rank whose balls count
        prefix: Restrict words and samples to this cylinder
        measure_budget: Largest number of balls per rank measured exactly
        max_depth: Digit budget for samples
        progress: Show a progress bar on interactive terminals

    Returns:
        HitStatistics
    """
    if n_ranks < 1 or samples < 1 or k_min < 1:
        raise ValidationError("ranks, samples and k_min must be positive", "khintchine")
    if min_rank > n_ranks:
        raise ValidationError(f"min_rank {min_rank} exceeds ranks {n_ranks}", "min_rank")
    prefix = ifs.check_word(prefix)
    if not isinstance(z, ZPoint):
        z = ZPoint(ifs.check_word(z))
    if z.exact is None and len(z.coding) < n_ranks:
        raise ValidationError(
            f"z coding has {len(z.coding)} digits, at least {n_ranks} are required", "z"
        )
    first = max(min_rank, len(prefix), 1)
    centers = CenterCache(ifs, z)
    maxima = af.suffix_maxima(first, n_ranks)
    exponent = 0.0 if af.ignore_diameter else af.exponent_ratio
    root = compose_word(ifs, prefix, allow_empty=True)
    logger.info(
        f"Hit experiment on {ifs.name}: {samples} samples, ranks {first}..{n_ranks}, "
        f"theta {af.describe()}"
    )

    hit_ranks: List[Tuple[int, ...]] = []
    for index in tqdm(range(samples), desc="samples", disable=None if progress else True):
        point = SamplePoint(ifs, sampler.digits(index), prefix, max_depth)
        hits = set()
        stack = [(len(prefix), root)]
        while stack:
            depth, composed = stack.pop()
            lo, hi = composed.image(ifs.hull)
            diameter = hi - lo
            if depth >= first and depth not in hits:
                radius = af.radius(diameter, depth)
                if radius > 0:
                    tolerance = PRECISION_SHARE * _as_fraction(radius)
                    point.refine(tolerance)
                    center, _ = centers.center(composed, depth, tolerance)
                    if abs(point.value - center) <= radius:
                        hits.add(depth)
            if depth >= n_ranks or maxima[depth + 1] <= 0:
                continue
            for digit in reversed(ifs.digits):
                child = composed.compose(ifs.map_for(digit))
                c_lo, c_hi = child.image(ifs.hull)
                # no ball in this subtree is wider than bound
                bound = float(c_hi - c_lo) ** exponent * maxima[depth + 1]
                point.refine(PRECISION_SHARE * _as_fraction(bound))
                gap = max(c_lo - point.value, point.value - c_hi, 0) - point.error
                if gap <= bound:
                    stack.append((depth + 1, child))
        hit_ranks.append(tuple(sorted(hits)))

    statistics = HitStatistics(
        n_ranks=n_ranks,
        min_rank=first,
        k_min=k_min,
        hit_ranks=hit_ranks,
    )
    for rank in range(first, n_ranks + 1):
        count = ifs.size ** (rank - len(prefix))
        statistics.ball_counts[rank] = count
        statistics.covered_measure[rank] = (
            rank_covered_measure(ifs, centers, af, rank, prefix) if count <= measure_budget else None
        )
    if dim_h is not None:
        statistics.partial_sums = list(divergence_partial_sums(ifs, af, dim_h, n_ranks, prefix))
    return statistics


def _as_fraction(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def target_balls(ifs: Ifs1D, centers: CenterCache, af: ApproxFunction, rank: int,
                 prefix: Word = ()) -> Iterator[TargetBall]:
    """The rank-n balls B(phi_I(z), Psi(I)) for I extending `prefix`."""
    for word, composed in iter_level_maps(ifs, rank, prefix=prefix):
        lo, hi = composed.image(ifs.hull)
        radius = af.radius(hi - lo, rank)
        tolerance = PRECISION_SHARE * _as_fraction(radius) if radius > 0 else (hi - lo) / 2
        center, error = centers.center(composed, rank, tolerance)
        yield TargetBall(word, center, error, radius)


def rank_covered_measure(ifs: Ifs1D, centers: CenterCache, af: ApproxFunction, rank: int,
                         prefix: Word = ()):
    """Length of the union of the rank-n balls, clipped to the hull."""
    lo, hi = ifs.hull
    clipped = []
    for ball in target_balls(ifs, centers, af, rank, prefix):
        b_lo, b_hi = ball.interval
        clipped.append((max(b_lo, lo), min(b_hi, hi)))
    return union_measure_1d(clipped)
