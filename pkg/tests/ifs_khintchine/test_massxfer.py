"""
Tests for ball rescaling and the cover-sum critical exponent scan.
"""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from ifs_khintchine.errors import BracketError, ValidationError
from ifs_khintchine.khintchine import ApproxFunction
from ifs_khintchine.massxfer import CoverRate, cover_rates, critical_exponent_scan, scale_ball
from ifs_khintchine.models.results import TargetBall

CANTOR_DIM = math.log(2) / math.log(3)


def test_scale_ball_pair():
    """Test r^{s/dim_H} for a (center, radius) pair."""
    scaled = scale_ball((Fraction(1, 2), Fraction(1, 9)), CANTOR_DIM / 2, CANTOR_DIM)
    assert float(scaled.scaled_radius) == pytest.approx(1 / 3)
    assert scaled.center == Fraction(1, 2)
    assert scaled.word is None


def test_scale_ball_identity():
    """Test that s = dim_H keeps the radius."""
    scaled = scale_ball((0, Fraction(1, 9)), CANTOR_DIM, CANTOR_DIM)
    assert mpmath.almosteq(scaled.scaled_radius, mpmath.mpf(1) / 9)


def test_scale_ball_target_ball():
    """Test that a TargetBall keeps its word."""
    ball = TargetBall((1,), Fraction(0), Fraction(0), Fraction(1, 4))
    scaled = scale_ball(ball, 1.0, 2.0)
    assert scaled.word == (1,)
    assert float(scaled.scaled_radius) == pytest.approx(0.5)


@pytest.mark.parametrize("s,t", [(0.3, 0.5), (CANTOR_DIM / 2, 1.1), (1.0, CANTOR_DIM)])
def test_scale_ball_composes(s, t):
    """Test that rescaling by s then by t equals one rescaling by s t / dim_H."""
    center, radius = Fraction(1, 3), Fraction(1, 27)
    twice = scale_ball((center, scale_ball((center, radius), s, CANTOR_DIM).scaled_radius), t, CANTOR_DIM)
    once = scale_ball((center, radius), s * t / CANTOR_DIM, CANTOR_DIM)
    assert mpmath.almosteq(twice.scaled_radius, once.scaled_radius, rel_eps=mpmath.mpf("1e-12"))
    assert twice.center == center


@pytest.mark.parametrize("radius,s,dim_h", [(0, 1.0, 1.0), (Fraction(1, 2), -1.0, 1.0), (Fraction(1, 2), 1.0, 0.0)])
def test_scale_ball_validation(radius, s, dim_h):
    """Test rejected radii and exponents."""
    with pytest.raises(ValidationError):
        scale_ball((0, radius), s, dim_h)


def test_cover_rate_verdicts():
    """Test the labels on either side of 1."""
    assert CoverRate(0.2, 1.5).verdict == "divergent"
    assert CoverRate(0.9, 0.5).verdict == "summable"
    assert CoverRate(0.5, 1.0).verdict == "critical"


def test_cover_rates_closed_form(cantor3):
    """Test rates 2 * 3^{-ts} for the middle-third system."""
    rates = cover_rates(cantor3, 2.0, 8, [0.1, 0.3])
    assert [r.rate for r in rates] == pytest.approx([2 * 3 ** -0.2, 2 * 3 ** -0.6])


def test_cover_rates_validation(cantor3):
    """Test t >= 1 and n >= 2."""
    with pytest.raises(ValidationError):
        cover_rates(cantor3, 0.5, 8, [0.5])
    with pytest.raises(ValidationError):
        cover_rates(cantor3, 1.0, 1, [0.5])


@pytest.mark.parametrize("t", [1.0, 2.0])
def test_critical_exponent_cantor(cantor3, t):
    """Test that the bracket contains dim_H / t."""
    result = critical_exponent_scan(cantor3, t=t)
    assert result.contains(CANTOR_DIM / t)
    assert result.upper - result.lower < 0.02
    assert result.t == t


def test_critical_exponent_uneven_ratios(ex21):
    """Test (3/4)^{2s} + (1/4)^{2s} = 1 at s = 1/2."""
    assert critical_exponent_scan(ex21, t=2.0).contains(0.5)


def test_critical_exponent_with_theta(cantor3):
    """Test that a geometric theta shifts the exponent to log 2 / log 6."""
    theta = ApproxFunction.parse("geometric:1,1/2")
    result = critical_exponent_scan(cantor3, t=1.0, theta=theta)
    assert result.contains(math.log(2) / math.log(6))


def test_critical_exponent_moebius(cf12):
    """Test that the enumerated rates cross 1 near the attractor dimension."""
    result = critical_exponent_scan(cf12, t=1.0, n=12, s_grid=np.linspace(0.3, 0.8, 51))
    assert result.lower - 0.01 <= 0.5313 <= result.upper + 0.01


def test_critical_exponent_bracket_error(cantor3):
    """Test a grid that never crosses 1."""
    with pytest.raises(BracketError):
        critical_exponent_scan(cantor3, s_grid=[2.0, 3.0])


def test_critical_exponent_grid_validation(cantor3):
    """Test that grid points must be positive."""
    with pytest.raises(ValidationError):
        critical_exponent_scan(cantor3, s_grid=[0.0, 1.0])
