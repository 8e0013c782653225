"""
Tests for data models.
"""

from fractions import Fraction

import mpmath
import pytest

from ifs_khintchine.errors import InvariantViolation, ValidationError
from ifs_khintchine.models.algebraic import HeightOrbitRecord, QuadraticIrrational, RationalPoint
from ifs_khintchine.models.ifs import (
    Cylinder,
    Ifs1D,
    MoebiusMap,
    SimilarityMap,
    format_word,
    parse_fraction,
    parse_word,
)
from ifs_khintchine.models.results import HitStatistics, ResultTable


@pytest.fixture
def cantor_data():
    """Inline config for the middle-third Cantor system."""
    return {
        "kind": "similarity",
        "maps": [
            {"ratio": "1/3", "translation": "0"},
            {"ratio": "1/3", "translation": "2/3"},
        ],
        "hull": ["0", "1"],
    }


def test_parse_fraction_exact_inputs():
    """Test that integers and fraction strings parse exactly."""
    assert parse_fraction(3, "k") == 3
    assert parse_fraction("2/3", "k") == Fraction(2, 3)
    assert parse_fraction(" -1/4 ", "k") == Fraction(-1, 4)


@pytest.mark.parametrize("value", [0.5, "0.5", "1e-3", True, None, "x/3"])
def test_parse_fraction_rejects_inexact(value):
    """Test that floats, decimals and junk are rejected with the key named."""
    with pytest.raises(ValidationError) as exc_info:
        parse_fraction(value, "ifs.maps[0].ratio")
    assert "ifs.maps[0].ratio" in str(exc_info.value)


def test_parse_word_forms():
    """Test the three accepted word spellings."""
    assert parse_word("1,2,1") == (1, 2, 1)
    assert parse_word("121") == (1, 2, 1)
    assert parse_word([2, 2]) == (2, 2)
    assert parse_word("") == ()
    assert format_word((1, 2, 1)) == "1,2,1"
    with pytest.raises(ValidationError):
        parse_word("1,0")


def test_similarity_compose_and_image():
    """Test composition order and interval images."""
    left = SimilarityMap(Fraction(1, 3), Fraction(0))
    right = SimilarityMap(Fraction(1, 3), Fraction(2, 3))
    composed = left.compose(right)  # x -> (x/3 + 2/3)/3
    assert composed.ratio == Fraction(1, 9)
    assert composed.translation == Fraction(2, 9)
    assert composed.image((Fraction(0), Fraction(1))) == (Fraction(2, 9), Fraction(1, 3))


def test_similarity_reflection():
    """Test that a negative sign flips the image endpoints into order."""
    flip = SimilarityMap(Fraction(1, 2), Fraction(1), sign=-1)
    assert flip(Fraction(0)) == 1
    assert flip.image((Fraction(0), Fraction(1))) == (Fraction(1, 2), Fraction(1))
    assert flip.compose(flip).scale == Fraction(1, 4)


def test_similarity_from_config_rejects_expanding_ratio():
    """Test that ratios outside (0, 1) are refused."""
    with pytest.raises(ValidationError):
        SimilarityMap.from_config({"ratio": "3/2", "translation": "0"})


def test_moebius_map_basics():
    """Test determinant check, composition and pole handling."""
    phi1 = MoebiusMap(0, 1, 1, 1)
    phi2 = MoebiusMap(0, 1, 1, 2)
    assert phi1(Fraction(0)) == 1
    composed = phi1.compose(phi2)
    assert composed(Fraction(0)) == phi1(phi2(Fraction(0)))
    assert phi1.pole() == -1
    assert not phi1.has_pole_in((Fraction(0), Fraction(1)))
    with pytest.raises(ValidationError):
        MoebiusMap(2, 0, 0, 1)
    with pytest.raises(ValidationError):
        phi1.image((Fraction(-2), Fraction(0)))


def test_moebius_canonical_key_ignores_sign():
    """Test that A and -A give the same key."""
    assert MoebiusMap(0, 1, 1, 1).canonical_key() == MoebiusMap(0, -1, -1, -1).canonical_key()


def test_ifs_from_config(cantor_data):
    """Test building a validated system from an inline section."""
    ifs = Ifs1D.from_config(cantor_data, name="cantor")
    assert ifs.size == 2
    assert list(ifs.digits) == [1, 2]
    assert ifs.ratios == [Fraction(1, 3)] * 2
    assert ifs.is_similarity
    assert ifs.is_contracting
    assert ifs.to_dict()["hull"] == ["0", "1"]


def test_ifs_rejects_hull_escape(cantor_data):
    """Test that a map sending the hull outside itself is rejected."""
    cantor_data["maps"][1]["translation"] = "5/6"
    with pytest.raises(ValidationError) as exc_info:
        Ifs1D.from_config(cantor_data)
    assert "hull" in str(exc_info.value)


def test_ifs_rejects_float_parameters(cantor_data):
    """Test that YAML floats never reach the maps."""
    cantor_data["maps"][0]["ratio"] = 0.3333
    with pytest.raises(ValidationError) as exc_info:
        Ifs1D.from_config(cantor_data)
    assert "ifs.maps[0].ratio" in str(exc_info.value)


def test_ifs_digit_range(cantor_data):
    """Test that digits are labelled 1..m."""
    ifs = Ifs1D.from_config(cantor_data)
    assert ifs.map_for(1).translation == 0
    with pytest.raises(ValidationError):
        ifs.map_for(0)
    with pytest.raises(ValidationError):
        ifs.check_word((1, 3))


def test_cylinder_properties():
    """Test cylinder accessors."""
    cyl = Cylinder((1, 2), (Fraction(2, 9), Fraction(1, 3)))
    assert cyl.rank == 2
    assert cyl.diameter == Fraction(1, 9)
    assert cyl.midpoint == Fraction(5, 18)
    assert Cylinder((1,), (Fraction(0), Fraction(1, 3))).contains(cyl)


def test_rational_point_height():
    """Test that heights are reduced denominators."""
    point = RationalPoint.from_fraction("6/9")
    assert (point.numerator, point.denominator) == (2, 3)
    assert point.height == 3
    with pytest.raises(ValidationError):
        RationalPoint(2, 4)


def test_quadratic_irrational_sqrt2():
    """Test height and root value of sqrt(2)."""
    alpha = QuadraticIrrational(1, 0, -2, "+")
    assert alpha.height == 2
    assert abs(alpha.numeric() - mpmath.sqrt(2)) < mpmath.mpf("1e-28")
    assert alpha.residual(alpha.numeric()) < mpmath.mpf("1e-25")


def test_quadratic_irrational_cancellation_free_root():
    """Test the small root of x^2 - 10^8 x + 1 keeps full precision."""
    alpha = QuadraticIrrational(1, -10 ** 8, 1, "-")
    assert abs(alpha.numeric() * 10 ** 8 - 1) < mpmath.mpf("1e-15")


def test_quadratic_irrational_rejects_reducible():
    """Test that square discriminants and non-primitive polynomials fail."""
    with pytest.raises(ValidationError):
        QuadraticIrrational(1, 0, -4)
    with pytest.raises(ValidationError):
        QuadraticIrrational(2, 0, -4)
    with pytest.raises(InvariantViolation):
        QuadraticIrrational.normalized(1, -3, 2, near=1)


def test_quadratic_normalized_picks_nearest_root():
    """Test sign normalisation and root selection."""
    alpha = QuadraticIrrational.normalized(-1, -2, 1, near=0.4)
    assert alpha.coefficients == (1, 2, -1)
    assert alpha.root == "+"


def test_height_record_rejects_violation():
    """Test that a record above its bound cannot be created."""
    with pytest.raises(InvariantViolation):
        HeightOrbitRecord((1,), RationalPoint(1, 9), 9, 3)


def test_hit_statistics_fractions():
    """Test hitter fractions and the quasi-independence ratio."""
    stats = HitStatistics(n_ranks=3, min_rank=1, k_min=2, hit_ranks=[(1, 2), (1,), ()])
    assert stats.samples == 3
    assert stats.hitter_fractions() == pytest.approx([2 / 3, 1 / 3])
    assert stats.rank_hit_fraction(1) == pytest.approx(2 / 3)
    assert stats.hitter_fraction(1, 2, 3) == pytest.approx(1 / 3)
    assert stats.mean_hit_count() == pytest.approx(1.0)
    # counts 2, 1, 0: mean 1, mean square 5/3
    assert stats.quasi_independence_ratio() == pytest.approx(3 / 5)


def test_hit_statistics_running_fractions():
    """Test hitter fractions accumulated rank by rank and the per-rank sum terms."""
    stats = HitStatistics(n_ranks=3, min_rank=1, k_min=2, hit_ranks=[(1, 3), (2,), ()],
                          partial_sums=[0.5, 0.75, 1.0])
    running = stats.running_hitter_fractions()
    assert running.shape == (3, 2)
    assert running[:, 0].tolist() == pytest.approx([1 / 3, 2 / 3, 2 / 3])
    assert running[:, 1].tolist() == pytest.approx([0, 0, 1 / 3])
    assert running[-1].tolist() == pytest.approx(stats.hitter_fractions())
    assert [stats.sum_term(rank) for rank in (1, 2, 3)] == [0.5, 0.25, 0.25]
    empty = HitStatistics(n_ranks=4, min_rank=2, k_min=3, hit_ranks=[])
    assert empty.running_hitter_fractions().shape == (3, 3)


def test_result_table_rows():
    """Test row length checks and record iteration."""
    table = ResultTable(name="t", columns=["a", "b"])
    table.add_row(1, 2)
    with pytest.raises(ValueError):
        table.add_row(1)
    assert list(table.records()) == [{"a": 1, "b": 2}]
