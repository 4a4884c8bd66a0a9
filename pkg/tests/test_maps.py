import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebmlab import maps
from ebmlab.exceptions import BadFold, ImageEscapesDomain, InvalidParameters, OutOfDomain
from ebmlab.geometry import TRIANGLE, Line
from ebmlab.maps import BranchId as B
from ebmlab.regions import P, sample_region

SQ2 = math.sqrt(2.0)


@st.composite
def params(draw):
    a = draw(st.floats(1.0001, 2.0))
    b = draw(st.floats(1.0, 2.0 / a))
    return a, b


@st.composite
def tri_points(draw):
    u = draw(st.floats(0, 1))
    v = draw(st.floats(0, 1))
    if u + v > 1:
        u, v = 1 - u, 1 - v
    return 2 * u + v, v


# ---- tent family


def test_tent_examples():
    assert maps.tent_eval(2, 0.5) == 1.0
    assert maps.tent_eval(1.5, 1.8) == pytest.approx(0.3, abs=1e-15)
    lo, hi = maps.tent_interval(SQ2)
    assert (lo, hi) == pytest.approx((0.828427, 1.414214), abs=1e-6)
    assert lo == pytest.approx(2 * SQ2 - 2, abs=1e-15)


def test_tent_out_of_domain():
    with pytest.raises(OutOfDomain):
        maps.tent_eval(1.5, 2.5)


def test_tent_product_examples():
    assert tuple(maps.tent_product_eval(2, (0.5, 1.5))) == (1.0, 1.0)
    assert maps.tent_product_eval(1.4, (1.4, 1.4)) == pytest.approx((0.84, 0.84), abs=1e-14)
    lo, hi = maps.tent_interval(1.3)
    for corner in ((lo, lo), (lo, hi), (hi, lo), (hi, hi)):
        q = maps.tent_product_eval(1.3, corner)
        assert all(lo - 1e-12 <= c <= hi + 1e-12 for c in q)


# ---- Lambda


def test_lambda_examples():
    assert maps.lambda_eval(1.0, (1.5, 0.3)) == pytest.approx((0.8, 0.2), abs=1e-15)
    assert maps.lambda_eval(0.75, (1.0, 1.0)) == pytest.approx((1.5, 0.0), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_lambda_branches_agree_on_critical_line(t, y):
    x = 1.0
    left = (t * (x + y), t * (x - y))
    right = (t * (2 - x + y), t * (2 - x - y))
    assert left == pytest.approx(right, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_lambda_differential_scales_by_t_sqrt2(t, vx, vy):
    v = np.array([vx, vy])
    for br in (B.T0, B.T1):
        assert np.linalg.norm(maps.lambda_matrix(t, br) @ v) == pytest.approx(t * SQ2 * np.linalg.norm(v), abs=1e-12)


def test_lambda_expanding_flag():
    assert maps.LambdaMap(0.8).expanding
    assert not maps.LambdaMap(0.7).expanding


# ---- Psi


def test_psi_branch_examples():
    prm = (1.3, 1.1)
    assert maps.psi_branch(prm, (0.3, 0.1)) == B.T0minus
    assert maps.psi_branch(prm, (0.6, 0.6)) == B.T0plus
    assert maps.psi_branch(prm, (1.7, 0.1)) == B.T1minus


def test_psi_branch_boundaries_go_to_minus_side():
    prm = (1.3, 1.1)
    assert maps.psi_branch(prm, (1.0, 0.05)) == B.T0minus
    assert maps.psi_branch(prm, (0.55, 0.55)) == B.T0minus


def test_psi_eval_examples():
    p = maps.psi_eval((2.0, 1.0), (1.2, 0.4))
    assert p == pytest.approx((1.2, 0.4), abs=1e-15)
    assert maps.psi_eval((1.3, 1.1), (0.3, 0.1)) == pytest.approx((0.39, 0.13), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(params(), st.floats(0, 1))
def test_psi_minus_branches_agree_on_critical_line(prm, s):
    a, b = prm
    y = s * (b - 1.0)
    left = maps.psi_branch_formula(a, b, B.T0minus, 1.0, y)
    right = maps.psi_branch_formula(a, b, B.T1minus, 1.0, y)
    assert left == pytest.approx((a, a * y), abs=1e-15)
    assert right == pytest.approx((a, a * y), abs=1e-15)


def test_psi_differential_examples():
    np.testing.assert_array_equal(maps.psi_differential((1.2, 1.2), B.T0plus), [[0, -1.2], [-1.2, 0]])
    expected = {B.T0minus: [[1, 0], [0, 1]], B.T0plus: [[0, -1], [-1, 0]],
                B.T1minus: [[-1, 0], [0, 1]], B.T1plus: [[0, -1], [1, 0]]}
    for br, m in expected.items():
        np.testing.assert_array_equal(maps.psi_differential((1.5, 1.2), br), 1.5 * np.array(m))


@settings(max_examples=100, deadline=None)
@given(params(), st.floats(0, 2 * math.pi))
def test_psi_differentials_are_conformal(prm, theta):
    a, _ = prm
    v = np.array([math.cos(theta), math.sin(theta)])
    for br in (B.T0minus, B.T0plus, B.T1minus, B.T1plus):
        m = maps.psi_differential(prm, br)
        np.testing.assert_allclose(m.T @ m, a * a * np.eye(2), atol=1e-12)
        assert abs(abs(np.linalg.det(m)) - a * a) < 1e-12
        assert abs(np.linalg.norm(m @ v) - a) < 1e-12


def test_psi_jacobian_matches_finite_differences():
    m = maps.PsiMap(1.3, 1.1)
    for p in ((0.3, 0.1), (0.6, 0.55), (1.7, 0.1), (1.2, 0.6)):
        h = 1e-7
        num = np.column_stack([
            (np.array(m((p[0] + h, p[1]))) - np.array(m((p[0] - h, p[1])))) / (2 * h),
            (np.array(m((p[0], p[1] + h))) - np.array(m((p[0], p[1] - h)))) / (2 * h),
        ])
        np.testing.assert_allclose(m.jacobian(p), num, atol=1e-6)


def test_params_validation():
    with pytest.raises(InvalidParameters):
        maps.Params(1.0, 1.5)
    with pytest.raises(InvalidParameters):
        maps.Params(1.5, 1.5)
    with pytest.raises(OutOfDomain):
        maps.psi_eval((1.3, 1.1), (1.0, 1.1))


def test_psi_keeps_triangle_invariant():
    worst = 0.0
    for i, (a, b) in enumerate(sample_region(P, 200, 3)):
        pts = TRIANGLE.sample_array(1000, i)
        img = maps.psi_eval_many(a, b, pts, 1)
        worst = max(worst, TRIANGLE.distance_outside(img).max())
    assert worst < 1e-10


@settings(max_examples=200, deadline=None)
@given(params(), st.floats(0, 1), st.sampled_from(["C", "L", "L'"]))
def test_adjacent_branches_agree_on_fold_lines(prm, s, which):
    a, b = prm
    f = maps.psi_branch_formula
    if which == "C":
        y = s
        lo, hi = (B.T0minus, B.T1minus) if y <= b - 1 else (B.T0plus, B.T1plus)
        p, q = f(a, b, lo, 1.0, y), f(a, b, hi, 1.0, y)
    elif which == "L":
        x = (b / 2) + s * (min(1.0, b) - b / 2)
        p, q = f(a, b, B.T0minus, x, b - x), f(a, b, B.T0plus, x, b - x)
    else:
        x = 1 + s * (b / 2)
        y = x - (2 - b)
        p, q = f(a, b, B.T1minus, x, y), f(a, b, B.T1plus, x, y)
    assert math.dist(p, q) < 1e-12


# ---- generic baker maps


def test_ebm_reproduces_psi(rng):
    for a, b in ((1.3, 1.1), (1.15, 1.6), (1.9, 1.05)):
        m = maps.PsiMap(a, b)
        e = m.as_ebm()
        for p in TRIANGLE.sample_array(100, 7):
            assert math.dist(maps.ebm_eval(e, p), m(p)) < 1e-12


def test_ebm_kernel_matches_scalar():
    e = maps.PsiMap(1.3, 1.1).as_ebm()
    pts = TRIANGLE.sample_array(500, 1)
    ref = np.array([maps.ebm_eval(e, p) for p in pts])
    assert np.abs(e.eval_many(pts) - ref).max() < 1e-12


def test_ebm_with_fold_and_rotation_is_lambda():
    for t in (0.72, 0.8, 0.9):
        e = maps.LambdaMap(t).as_ebm()
        rot = t * SQ2 * np.array([[math.cos(math.pi / 4), -math.sin(math.pi / 4)],
                                  [math.sin(math.pi / 4), math.cos(math.pi / 4)]])
        rot = rot @ np.diag([1.0, -1.0])
        np.testing.assert_allclose(e.linear, rot, atol=1e-15)
        for p in TRIANGLE.sample_array(100, 2):
            assert math.dist(maps.ebm_eval(e, p), maps.lambda_eval(t, p)) < 1e-12


def test_ebm_identity_side_is_affine():
    e = maps.PsiMap(1.3, 1.1).as_ebm()
    assert maps.ebm_eval(e, (0.3, 0.1)) == pytest.approx((0.39, 0.13), abs=1e-15)


def test_ebm_construction_checks():
    with pytest.raises(InvalidParameters):
        maps.ebm_compose(TRIANGLE, [Line.vertical(1.0)], (0, 0), np.eye(2))
    with pytest.raises(ImageEscapesDomain):
        maps.ebm_compose(TRIANGLE, [Line.vertical(1.0)], (0, 0), 2.5 * np.eye(2))
    with pytest.raises(BadFold):
        maps.ebm_compose(TRIANGLE, [Line.vertical(0.3)], (0, 0), 1.1 * np.eye(2))


def test_psi_tilde_agrees_with_psi_on_low_points():
    a, b = 1.2, 1.3
    e = maps.psi_tilde(a, b)
    m = maps.PsiMap(a, b)
    for p in TRIANGLE.sample_array(200, 5):
        if p[1] <= 1 / a:
            assert math.dist(e(p), m(p)) < 1e-12


def test_make_map():
    assert isinstance(maps.make_map("psi", a=1.2, b=1.1), maps.PsiMap)
    assert isinstance(maps.make_map("gamma", mu=1.3), maps.TentProduct)
    with pytest.raises(InvalidParameters):
        maps.make_map("henon")
