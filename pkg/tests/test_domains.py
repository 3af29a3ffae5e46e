from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toeplab.domains import (
    Annulus,
    CurveTube,
    Disk,
    HalfPlane,
    Plane,
    Polygon,
    annulus_bounds_jordan,
    count_in_region,
    parse_region,
    region_from_dict,
)
from toeplab.errors import ConfigError, InvariantViolation, SuspectBoundary
from toeplab.operators import OperatorSpec, circulant_spectrum, circulant_weyl_count
from toeplab.symbol import LaurentSymbol, eval_curve, preimage_measure


def angle_sum_inside(vertices, z) -> bool:
    """Winding number of a closed polygon around ``z`` from summed angles."""
    v = np.asarray(vertices, dtype=complex) - z
    turns = np.angle(np.roll(v, -1) / v)
    return abs(np.sum(turns)) > math.pi


def test_disk_contains_center():
    assert Disk(0, 1).contains(0) is True


def test_annulus_excludes_center():
    assert Annulus(0, 1, 2).contains(0) is False
    assert Annulus(0, 1, 2).contains(1.5j) is True


def test_boundaries_count_as_inside():
    assert Disk(0, 1).contains(1.0)
    assert Annulus(0, 1, 2).contains(2.0) and Annulus(0, 1, 2).contains(-1.0)
    assert HalfPlane(0.0, 0.5).contains(0.5 + 3j)
    assert Polygon((0, 1, 1 + 1j, 1j)).contains(0.5)


def test_half_plane_orientation():
    upper = HalfPlane(math.pi / 2, 1.0)  # Im z >= 1
    assert upper.contains(2j) and not upper.contains(0.5j)


def test_tube_contains_curve_points(three_term):
    tube = CurveTube(three_term, 0.1)
    pts = eval_curve(three_term, np.linspace(0, 2 * np.pi, 25))
    assert np.all(tube.contains(pts))
    assert not tube.contains(10.0)


def test_vectorized_shapes():
    pts = np.array([[0, 2], [0.5j, 3]])
    for region in (Disk(0, 1), Annulus(0, 1, 2), HalfPlane(0, 0), Polygon((-1 - 1j, 1 - 1j, 1 + 1j)), Plane()):
        assert region.contains(pts).shape == (2, 2)


def test_invalid_regions():
    with pytest.raises(InvariantViolation):
        Disk(0, 0)
    with pytest.raises(InvariantViolation):
        Annulus(0, 2, 1)
    with pytest.raises(InvariantViolation):
        Polygon((0, 1, 1j, 1 + 1j))  # bow tie
    with pytest.raises(InvariantViolation):
        Polygon((0, 1))


def test_tube_needs_positive_radius(three_term):
    with pytest.raises(InvariantViolation):
        CurveTube(three_term, 0.0)


def test_polygon_matches_angle_sum_oracle(rng):
    verts = (0, 3, 3 + 2j, 1.5 + 0.5j, 2j)  # non-convex
    poly = Polygon(verts)
    pts = rng.uniform(-0.5, 3.5, 1000) + 1j * rng.uniform(-0.5, 2.5, 1000)
    got = poly.contains(pts)
    expected = np.array([angle_sum_inside(verts, p) for p in pts])
    assert np.array_equal(got, expected)


def test_count_examples():
    roots = [1, 1j, -1, -1j]
    assert count_in_region(roots, HalfPlane(0.0, 0.5)) == 1
    assert count_in_region([], Disk(0, 1)) == 0


def test_count_matches_circulant_weyl(five_term):
    spec = OperatorSpec(five_term, 60)
    region = Disk(1 + 1j, 3)
    assert count_in_region(circulant_spectrum(spec), region) == circulant_weyl_count(spec, region)[0]


def test_jordan_annulus_bounds():
    r_lo, r_hi = annulus_bounds_jordan(1000, 1e-14, 0.1)
    assert r_hi == pytest.approx(math.exp(math.log(1e-11) / 1000), rel=1e-14)
    assert r_hi == pytest.approx(0.9750, abs=1e-4)
    assert r_lo == pytest.approx(r_hi * math.exp(-0.1))
    lo, hi = annulus_bounds_jordan(500, 1e-12, 1e-12)
    assert lo == pytest.approx(hi, rel=1e-11)
    assert annulus_bounds_jordan(100, 0.01, 0.3)[1] == pytest.approx(1.0)


def test_jordan_annulus_rejects_nonpositive_delta():
    with pytest.raises(InvariantViolation):
        annulus_bounds_jordan(10, 0.0, 0.1)


@pytest.mark.parametrize(
    "literal",
    ["disk:0.0,1.0,1.5", "annulus:0.0,0.0,1.0,2.0", "halfplane:0.5,-1.0", "polygon:0.0,0.0,1.0,0.0,0.0,1.0",
     "tube:0.25", "plane"],
)
def test_literal_round_trip(literal, three_term):
    region = parse_region(literal, three_term)
    assert region.to_literal() == literal
    assert region_from_dict(region.to_dict(), three_term) == region


@pytest.mark.parametrize("literal", ["disk:1,2", "square:1", "polygon:0,0,1,1", "disk:a,b,c", "plane:1"])
def test_bad_literals(literal):
    with pytest.raises(ConfigError):
        parse_region(literal)


def test_tube_literal_needs_symbol():
    with pytest.raises(ConfigError):
        parse_region("tube:0.1")


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.3, 3))
@settings(max_examples=25, deadline=None)
def test_membership_fraction_matches_arc_measure(cx, cy, r):
    sym = LaurentSymbol.from_coeffs({1: 2j, -2: 1.0, -3: 0.7})
    region = Disk(complex(cx, cy), r)
    try:
        measure = preimage_measure(sym, region)
    except SuspectBoundary:
        return
    n = 4000
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, n)
    frac = np.mean(region.contains(eval_curve(sym, theta)))
    p = measure / (2 * np.pi)
    assert abs(frac - p) <= 3 * math.sqrt(max(p * (1 - p), 1e-4) / n) + 1e-3
