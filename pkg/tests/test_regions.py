import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from ebmlab import regions as R
from ebmlab import renorm
from ebmlab.exceptions import InvalidParameters, OutOfRange, UnsupportedRegion

SQ2 = math.sqrt(2.0)
ALL = [R.P, R.P1, R.P2, R.PDELTA, R.P3, R.P1n(1), R.P1n(2), R.P2n(1), R.P2n(3), R.H_DELTA_IMAGE_P3, R.H_PI_IMAGE_P3]


def test_p3_example():
    assert R.in_region(R.P3, 1.05, 1.38)
    lo, hi = R.region_bounds(R.P3, 1.05)
    a = Fraction(105, 100)
    exact_lo = (2 + a**2 + a**3) / (1 + a + a**3)
    exact_hi = 2 * (1 + a + a**3) / (a * (2 + a**2 + a**3))
    assert lo == pytest.approx(float(exact_lo), abs=1e-15)
    assert hi == pytest.approx(float(exact_hi), abs=1e-15)
    # the quoted approximations are good to about 5 digits
    assert lo == pytest.approx(1.328120, abs=1e-5)
    assert hi == pytest.approx(1.434178, abs=1e-5)


def test_p1n_example():
    assert R.in_region(R.P1n(2), 1.15, 1.10)
    assert R.region_bounds(R.P1n(2), 1.15)[1] == pytest.approx(1.18702, abs=1e-5)
    assert 2 ** (1 / 8) < 1.15 <= 2 ** (1 / 4)


def test_a_equal_one_excluded():
    assert not R.in_region(R.P, 1.0, 1.5)
    with pytest.raises(OutOfRange):
        R.region_bounds(R.P, 1.0)


def test_bounds_examples():
    assert R.region_bounds(R.P, 1.6) == pytest.approx((1.0, 1.25))
    assert R.region_bounds(R.P1, 1.3)[1] == pytest.approx(1.072261, abs=1e-6)


def test_p3_bounds_meet_at_fifth_root_of_two():
    lo, hi = R.region_bounds(R.P3, 2**0.2)
    assert lo == pytest.approx(hi, abs=1e-14)


def test_pdelta_bounds_meet_at_fourth_root_of_two():
    def gap(a):
        lo, hi = R._raw_bounds(R.PDELTA, a)
        return hi - lo

    root = brentq(gap, 1.01, 1.5, xtol=1e-15)
    assert root == pytest.approx(2**0.25, abs=1e-12)
    lo, hi = R.region_bounds(R.PDELTA, 2**0.2)
    assert lo < hi
    lo, hi = R.region_bounds(R.PDELTA, 1.2)
    assert lo > hi


def test_gamma0_endpoints():
    assert R.gamma0(1 / SQ2) == pytest.approx((1.0, SQ2), abs=1e-15)
    a, b = R.gamma0(2**-0.4)
    assert (a, b) == pytest.approx((2**0.8, 2**0.2), abs=1e-14)
    assert a * b == pytest.approx(2.0, abs=1e-14)
    with pytest.raises(OutOfRange):
        R.gamma0(0.5)


@settings(max_examples=100, deadline=None)
@given(st.floats(1 / SQ2, 2**-0.4))
def test_gamma0_graph_form(t):
    a, b = R.gamma0(t)
    assert b == pytest.approx(SQ2 * a ** (-3 / 8), rel=1e-13)
    assert R.in_region(R.P, a, b, closed=True) or a * b <= 2 + 1e-12


def test_attractor_count_prediction():
    assert R.attractor_count_prediction(R.P1n(1)) == 1
    assert R.attractor_count_prediction(R.P1n(3)) == 4
    assert R.attractor_count_prediction(R.P2n(2)) == 2
    with pytest.raises(UnsupportedRegion):
        R.attractor_count_prediction(R.P3)


def test_region_id_validation():
    with pytest.raises(InvalidParameters):
        R.RegionId("P1n", 0)
    with pytest.raises(InvalidParameters):
        R.RegionId("Q")
    assert R.RegionId.parse("P2n(3)") == R.P2n(3)


@settings(max_examples=500, deadline=None)
@given(st.sampled_from(ALL), st.floats(1.0001, 2.0), st.floats(0.9, 2.1))
def test_fiber_consistency(r, a, b):
    lo, hi = R.region_bounds(r, a)
    assert R.in_region(r, a, b) == (lo <= b <= hi)


def test_p3_inside_pdelta():
    pts = R.sample_region(R.P3, 10_000, 4)
    assert all(R.in_region(R.PDELTA, a, b) for a, b in pts)


def test_p3_inside_its_images():
    pts = R.sample_region(R.P3, 1000, 5)
    assert all(R.in_region(R.H_DELTA_IMAGE_P3, a, b) for a, b in pts)
    assert all(R.in_region(R.H_PI_IMAGE_P3, a, b) for a, b in pts)


def test_gamma0_grid_in_closed_parameter_set():
    for t in np.linspace(1 / SQ2, 2**-0.4, 1001):
        a, b = R.gamma0(t)
        assert 1.0 - 1e-15 <= a <= 2.0 and 1.0 <= b <= 2.0 and a * b <= 2 + 1e-12


def test_region_report_consistent():
    rep = R.region_report(1.15, 1.10)
    assert rep.p1n == 2 and rep.p2n is None
    for key, (lo, hi) in rep.boundary_b.items():
        assert rep.memberships[key] == (lo <= 1.10 <= hi)


def test_region_report_flags_boundary():
    lo, hi = R.region_bounds(R.P3, 1.05)
    rep = R.region_report(1.05, hi)
    assert rep.boundary_exact["P3"]
    assert rep.memberships["P3"]


def test_p1n_index_windows():
    assert R.p1n_index(1.3) == 1
    assert R.p1n_index(1.15) == 2
    assert R.p1n_index(2 ** (1 / 4)) == 2
    assert R.p1n_index(1.5) is None


def test_sample_region_members():
    for r in (R.P1, R.P2, R.P3, R.P1n(2)):
        pts = R.sample_region(r, 50, 1)
        assert len(pts) == 50
        assert all(R.in_region(r, a, b) for a, b in pts)


def test_renorm_images_match_closed_forms():
    for a, b in R.sample_region(R.P3, 500, 6):
        assert R.in_region(R.P, *renorm.apply("Delta", a, b))
