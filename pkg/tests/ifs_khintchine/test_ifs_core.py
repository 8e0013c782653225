"""
Tests for word and cylinder algebra.
"""

from fractions import Fraction

import numpy as np
import pytest

from ifs_khintchine.errors import BudgetExceededError, ValidationError
from ifs_khintchine.ifs_core import (
    NaturalSampler,
    check_separation,
    compose_word,
    cylinder_of,
    enumerate_level,
    fixed_point,
    hull_is_tight,
    iter_level_maps,
    natural_sampler,
    periodic_coding,
    point_of_coding,
    sample_coding,
)
from ifs_khintchine.models.algebraic import QuadraticIrrational
from ifs_khintchine.models.ifs import MoebiusMap


def test_compose_word_cantor(cantor3):
    """Test phi_I for small words of the Cantor system."""
    assert compose_word(cantor3, (1,))(Fraction(0)) == 0
    assert compose_word(cantor3, (2,))(Fraction(0)) == Fraction(2, 3)
    assert compose_word(cantor3, (1, 2))(Fraction(0)) == Fraction(2, 9)


def test_compose_empty_word(cantor3):
    """Test that the empty word needs the explicit flag."""
    with pytest.raises(ValidationError):
        compose_word(cantor3, ())
    assert compose_word(cantor3, (), allow_empty=True)(Fraction(1, 2)) == Fraction(1, 2)


def test_compose_rejects_out_of_range_digit(cantor3):
    """Test digit validation."""
    with pytest.raises(ValidationError):
        compose_word(cantor3, (1, 3))


def test_cylinder_diameter_is_ratio_product(ex21):
    """Test Diam(X_I) = prod r_i * Diam(hull) for similarities."""
    cyl = cylinder_of(ex21, (1, 2, 1))
    assert cyl.diameter == Fraction(3, 4) * Fraction(1, 4) * Fraction(3, 4)
    assert cyl.rank == 3


def test_enumerate_level_order_and_nesting(cantor3):
    """Test lexicographic order and that children nest in parents."""
    level2 = list(enumerate_level(cantor3, 2))
    assert [c.word for c in level2] == [(1, 1), (1, 2), (2, 1), (2, 2)]
    parents = {c.word: c for c in enumerate_level(cantor3, 1)}
    assert all(parents[c.word[:1]].contains(c) for c in level2)


def test_enumerate_level_with_prefix(cantor3):
    """Test that a prefix restricts the enumeration to one cylinder."""
    words = [c.word for c in enumerate_level(cantor3, 3, prefix=(2,))]
    assert words == [(2, 1, 1), (2, 1, 2), (2, 2, 1), (2, 2, 2)]


def test_level_budget(cantor3):
    """Test that an over-budget enumeration fails before any work."""
    with pytest.raises(BudgetExceededError) as exc_info:
        list(iter_level_maps(cantor3, 20, budget=1000))
    assert exc_info.value.requested == 2 ** 20
    assert exc_info.value.exit_code == 3


def test_moebius_cylinders_nest(cf12):
    """Test nesting of continued-fraction cylinders."""
    parents = {c.word: c for c in enumerate_level(cf12, 3)}
    for child in enumerate_level(cf12, 4):
        assert parents[child.word[:3]].contains(child)


def test_point_of_coding_converges(cantor3):
    """Test that midpoints approach the coded point with certified error."""
    coding = periodic_coding((2,), 20)
    value, error = point_of_coding(cantor3, coding, 20)
    assert abs(value - 1) <= error
    assert error == Fraction(1, 2 * 3 ** 20)
    with pytest.raises(ValidationError):
        point_of_coding(cantor3, coding, 21)


def test_separation_labels(cantor3, ex22, overlap_demo, cf12):
    """Test SSC, OSC and overlapping verdicts."""
    assert check_separation(cantor3).kind == "SSC"
    assert check_separation(cantor3).gap == (Fraction(1, 3), Fraction(2, 3))
    assert check_separation(ex22).kind == "OSC"
    assert check_separation(ex22).certified
    report = check_separation(overlap_demo)
    assert report.kind == "overlapping"
    assert not report.certified
    assert report.label == "overlapping (inconclusive)"
    assert check_separation(cf12).kind == "SSC"


def test_hull_is_tight(cantor3, ex21, cf12):
    """Test that similarity preset hulls are convex hulls of the attractor."""
    assert hull_is_tight(cantor3)
    assert hull_is_tight(ex21)
    assert not hull_is_tight(cf12)


def test_fixed_points(cantor3):
    """Test exact fixed points of similarities and Moebius maps."""
    assert fixed_point(cantor3.map_for(1)) == 0
    assert fixed_point(cantor3.map_for(2)) == 1
    golden = fixed_point(MoebiusMap(0, 1, 1, 1))
    assert isinstance(golden, QuadraticIrrational)
    assert golden.coefficients == (1, 1, -1)
    assert float(golden.numeric()) == pytest.approx((5 ** 0.5 - 1) / 2)


def test_natural_sampler_reproducible():
    """Test that a stream depends only on (seed, index)."""
    sampler = NaturalSampler.from_weights([3, 1], seed=7)
    first = sample_coding(sampler, 100, index=4)
    again = sample_coding(NaturalSampler.from_weights([3, 1], seed=7), 100, index=4)
    other = sample_coding(sampler, 100, index=5)
    assert first == again
    assert first != other
    assert set(first) <= {1, 2}


def test_natural_sampler_frequencies():
    """Test that digit frequencies follow the weights."""
    sampler = NaturalSampler.from_weights([0.75, 0.25], seed=1)
    digits = np.array(sample_coding(sampler, 20000))
    assert np.mean(digits == 1) == pytest.approx(0.75, abs=0.02)


def test_natural_sampler_zero_weight():
    """Test that zero weights are allowed and never drawn."""
    sampler = NaturalSampler(np.array([0.0, 1.0]))
    assert set(sample_coding(sampler, 50)) == {2}


@pytest.mark.parametrize("weights", [[0.5, 0.6], [-0.5, 1.5], [0.0, 0.0]])
def test_natural_sampler_rejects_bad_weights(weights):
    """Test weight validation."""
    with pytest.raises(ValidationError):
        NaturalSampler(np.array(weights))


def test_natural_sampler_for_systems(cantor3, cf12):
    """Test the natural-measure weights for both kinds of system."""
    sampler = natural_sampler(cantor3, np.log(2) / np.log(3))
    assert sampler.weights == pytest.approx([0.5, 0.5])
    blocks = natural_sampler(cf12, 0.5, base_level=2)
    assert blocks.block_length == 2
    assert len(blocks.blocks) == 4
    assert len(sample_coding(blocks, 9)) == 9


def test_compose_word_moebius_matrix(cf12):
    """Test that composing 1/(x + 1) with itself is the matrix product [[1, 1], [1, 2]]."""
    composed = compose_word(cf12, (1, 1))
    assert (composed.a, composed.b, composed.c, composed.d) == (1, 1, 1, 2)
    assert composed(Fraction(1, 2)) == Fraction(3, 5)


def test_point_of_coding_golden_mean(cf12):
    """Test that the all-ones continued fraction coding reaches (sqrt(5) - 1) / 2."""
    value, error = point_of_coding(cf12, periodic_coding((1,), 30), 30)
    assert abs(float(value) - (5 ** 0.5 - 1) / 2) <= float(error) + 1e-15
    assert error < Fraction(1, 10 ** 10)


@pytest.mark.parametrize("first, second", [
    ((1,), (2,)),
    ((1, 2), (2, 2, 1)),
    ((2, 1, 1), (1, 2)),
])
def test_similarity_ratio_is_multiplicative(ex21, first, second):
    """Test r_{IJ} = r_I * r_J for words of a similarity system."""
    joined = compose_word(ex21, first + second)
    assert joined.scale == compose_word(ex21, first).scale * compose_word(ex21, second).scale
    assert cylinder_of(ex21, first + second).diameter == joined.ratio * ex21.hull_diameter


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_level_diameters_sum_to_one_at_similarity_dimension(cantor3, ex21, n):
    """Test sum over D^n of Diam(X_I)^dim_S = 1 on unit hulls."""
    # dim_S(ex21) = 1, so the sum is exact
    assert sum(c.diameter for c in enumerate_level(ex21, n)) == 1
    dim = np.log(2) / np.log(3)
    total = sum(float(c.diameter) ** dim for c in enumerate_level(cantor3, n))
    assert total == pytest.approx(1.0, abs=1e-12)
