"""
Result models shared by the computational modules and the output layer.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from .ifs import Word


@dataclass
class DimensionResult:
    """A dimension value or bracket."""
    lower: float
    upper: float
    method: str  # exact-similarity, pressure-bracket
    level: Optional[int] = None
    tolerance: float = 0.0
    hausdorff_certified: bool = True

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack


@dataclass
class SeparationReport:
    """Outcome of the level-1 interval separation test."""
    kind: str  # SSC, OSC, overlapping
    certified: bool
    witness: Optional[Tuple[int, int]] = None
    gap: Optional[Tuple[Fraction, Fraction]] = None

    @property
    def label(self) -> str:
        return f"{self.kind} ({'certified' if self.certified else 'inconclusive'})"


@dataclass(frozen=True)
class TargetBall:
    """Closed ball B(phi_I(z), Psi(I)) with a certified centre error."""
    word: Word
    center: Fraction
    center_error: Fraction
    radius: Any

    @property
    def rank(self) -> int:
        return len(self.word)

    @property
    def interval(self) -> Tuple[Any, Any]:
        return (self.center - self.radius, self.center + self.radius)


@dataclass
class HitStatistics:
    """Finite-rank surrogate for limsup membership over a batch of samples."""
    n_ranks: int
    min_rank: int
    k_min: int
    hit_ranks: List[Tuple[int, ...]]
    ball_counts: Dict[int, int] = field(default_factory=dict)
    covered_measure: Dict[int, Optional[Any]] = field(default_factory=dict)
    partial_sums: List[float] = field(default_factory=list)

    @property
    def samples(self) -> int:
        return len(self.hit_ranks)

    def hit_matrix(self, lo: int = None, hi: int = None) -> np.ndarray:
        """Boolean samples x ranks matrix restricted to ranks in [lo, hi]."""
        lo = self.min_rank if lo is None else lo
        hi = self.n_ranks if hi is None else hi
        matrix = np.zeros((self.samples, max(hi - lo + 1, 0)), dtype=bool)
        for row, ranks in enumerate(self.hit_ranks):
            for rank in ranks:
                if lo <= rank <= hi:
                    matrix[row, rank - lo] = True
        return matrix

    def hit_counts(self, lo: int = None, hi: int = None) -> np.ndarray:
        return self.hit_matrix(lo, hi).sum(axis=1)

    def hitter_fraction(self, k: int, lo: int = None, hi: int = None) -> float:
        if self.samples == 0:
            return 0.0
        return float(np.mean(self.hit_counts(lo, hi) >= k))

    def hitter_fractions(self, hi: int = None) -> List[float]:
        """Fractions of samples hit at >= k distinct ranks <= hi, for k = 1..k_min."""
        counts = self.hit_counts(None, hi)
        if self.samples == 0:
            return [0.0] * self.k_min
        return [float(np.mean(counts >= k)) for k in range(1, self.k_min + 1)]

    def running_hitter_fractions(self) -> np.ndarray:
        """
        Row r, column k-1: share of samples hit at >= k distinct ranks in
        [min_rank, min_rank + r], for k = 1..k_min.
        """
        ranks = max(self.n_ranks - self.min_rank + 1, 0)
        if self.samples == 0:
            return np.zeros((ranks, self.k_min))
        running = self.hit_matrix().cumsum(axis=1)
        return np.column_stack([
            (running >= k).mean(axis=0) for k in range(1, self.k_min + 1)
        ])

    def sum_term(self, rank: int) -> float:
        """S_rank - S_(rank-1)."""
        previous = self.partial_sums[rank - 2] if rank >= 2 else 0.0
        return float(self.partial_sums[rank - 1] - previous)

    def rank_hit_fraction(self, rank: int) -> float:
        if self.samples == 0:
            return 0.0
        return sum(1 for ranks in self.hit_ranks if rank in ranks) / self.samples

    def mean_hit_count(self, lo: int = None, hi: int = None) -> float:
        if self.samples == 0:
            return 0.0
        return float(np.mean(self.hit_counts(lo, hi)))

    def quasi_independence_ratio(self, lo: int = None, hi: int = None) -> Optional[float]:
        """
        (sum_n P(E_n))^2 / sum_{n,m} P(E_n and E_m) from the empirical hit matrix.

        Equals mean(count)^2 / mean(count^2); None when no sample was hit.
        """
        counts = self.hit_counts(lo, hi).astype(float)
        second = float(np.mean(counts ** 2)) if self.samples else 0.0
        if second == 0.0:
            return None
        return float(np.mean(counts)) ** 2 / second


@dataclass
class ResultTable:
    """A named table with a fixed column order plus summary notes."""
    name: str
    columns: List[str]
    rows: List[Tuple[Any, ...]] = field(default_factory=list)
    claim: str = ""
    summary: List[str] = field(default_factory=list)

    def add_row(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(
                f"row has {len(values)} values, table '{self.name}' has {len(self.columns)} columns"
            )
        self.rows.append(tuple(values))

    def records(self) -> Iterator[Dict[str, Any]]:
        for row in self.rows:
            yield dict(zip(self.columns, row))
