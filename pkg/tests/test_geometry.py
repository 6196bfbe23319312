"""Scale-vector geometry: covariance maps, ellipse bounds, support."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rubs.geometry import (
    MIN_ELONGATION_BOUND,
    as_scale_vector,
    covariance_from_params,
    covariance_general,
    covariance_of,
    direction_vectors,
    ellipse_params_of,
    elongation_bound,
    support_polygon,
    validate_covariance,
)

positive = st.floats(min_value=0.05, max_value=20.0,
                     allow_nan=False, allow_infinity=False)
scale_vectors = st.tuples(positive, positive, positive, positive)


def test_as_scale_vector_rejects_bad_input():
    with pytest.raises(ValueError):
        as_scale_vector([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        as_scale_vector([1.0, -2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        as_scale_vector([1.0, 0.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        as_scale_vector([1.0, math.nan, 3.0, 4.0])
    out = as_scale_vector((1, 2, 3, 4))
    assert out.dtype == np.float64 and out.shape == (4,)


def test_direction_vectors_four():
    u = direction_vectors(4)
    r = math.sqrt(0.5)
    expected = np.array([[1, 0], [r, r], [0, 1], [-r, r]])
    assert np.allclose(u, expected, atol=1e-15)


def test_direction_vectors_general():
    u = direction_vectors(6)
    assert u.shape == (6, 2)
    norms = np.hypot(u[:, 0], u[:, 1])
    assert np.allclose(norms, 1.0, atol=1e-15)
    angles = np.arctan2(u[:, 1], u[:, 0])
    assert np.allclose(np.diff(angles), math.pi / 6, atol=1e-12)


@given(scale_vectors)
def test_covariance_closed_form_matches_general(a):
    # Two routes: the hand-expanded 2x2 form and the generic
    # sum-of-outer-products; they must agree to machine precision.
    c1 = covariance_of(a)
    c2 = covariance_general(a)
    assert np.abs(c1 - c2).max() < 1e-12 * max(1.0, np.abs(c1).max())


def test_covariance_closed_form_value():
    a = np.array([1.0, 2.0, 3.0, 4.0])
    c = covariance_of(a)
    expected = np.array([[2 + 4 + 16, 4 - 16], [4 - 16, 18 + 4 + 16]]) / 24.0
    assert np.allclose(c, expected, atol=1e-15)


@given(st.floats(0.1, 50.0), st.floats(1.002, 40.0),
       st.floats(0.0, math.pi - 1e-6))
@settings(max_examples=200)
def test_ellipse_roundtrip(size, rho, theta):
    c = covariance_from_params(size, rho, theta)
    got = ellipse_params_of(c)
    assert got.size == pytest.approx(size, rel=1e-9)
    assert got.elongation == pytest.approx(rho, rel=1e-7)
    d = (got.orientation - theta) % math.pi
    d = min(d, math.pi - d)
    assert d < 1e-6 * (1.0 + 1.0 / (rho - 1.0))


def test_ellipse_params_isotropic():
    got = ellipse_params_of(np.eye(2) * 3.0)
    assert got.size == pytest.approx(6.0, rel=1e-12)
    assert got.elongation == 1.0
    assert got.orientation == 0.0


def test_validate_covariance_rejects():
    with pytest.raises(ValueError):
        validate_covariance(np.array([[1.0, 0.0], [0.1, 1.0]]))
    with pytest.raises(ValueError):
        validate_covariance(np.array([[1.0, 2.0], [2.0, 1.0]]))  # not PD
    with pytest.raises(ValueError):
        validate_covariance(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        validate_covariance(np.eye(3))


def test_elongation_bound_midpoint_exact():
    assert elongation_bound(math.pi / 8) == 3.0 + 2.0 * math.sqrt(2.0)
    assert elongation_bound(3 * math.pi / 8) == MIN_ELONGATION_BOUND


def test_elongation_bound_principal_directions():
    for k in range(4):
        assert elongation_bound(k * math.pi / 4) == math.inf


@given(st.floats(1e-3, math.pi / 4 - 1e-3))
@settings(max_examples=200)
def test_elongation_bound_symmetry_and_period(phi):
    u = elongation_bound(phi)
    assert u >= MIN_ELONGATION_BOUND
    # Mirror symmetry inside an octant and quarter-turn periodicity.
    # Tolerances widen near the poles where the bound blows up.
    assert elongation_bound(math.pi / 4 - phi) == pytest.approx(u, rel=1e-9)
    assert elongation_bound(phi + math.pi / 4) == pytest.approx(u, rel=1e-9)


def test_elongation_bound_domain():
    with pytest.raises(ValueError):
        elongation_bound(-0.1)
    with pytest.raises(ValueError):
        elongation_bound(math.pi)


def test_elongation_bound_monotone_into_midpoint():
    phis = np.linspace(0.01, math.pi / 8, 50)
    vals = [elongation_bound(p) for p in phis]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_bound_tightness_near_limit_family():
    # Two nearly-degenerate diagonal widths push the reachable shape
    # towards the worst-case orientation midway between lattice axes.
    delta = 1e-3
    c = covariance_of([1.0, 1.0, delta, delta])
    got = ellipse_params_of(c)
    assert got.orientation == pytest.approx(math.pi / 8, abs=1e-12)
    limit = 3.0 + 2.0 * math.sqrt(2.0)
    assert got.elongation < limit
    assert got.elongation > limit - 0.01


def test_support_polygon_octagon():
    a = 2.0 * np.array([1.0, math.sqrt(2.0), 1.0, math.sqrt(2.0)])
    poly = support_polygon(a)
    expected = np.array([
        [3, 1], [1, 3], [-1, 3], [-3, 1],
        [-3, -1], [-1, -3], [1, -3], [3, -1],
    ], dtype=float)
    assert np.allclose(poly, expected, atol=1e-12)


@given(scale_vectors)
@settings(max_examples=100)
def test_support_polygon_properties(a):
    poly = support_polygon(a)
    assert 4 <= len(poly) <= 8
    # Counter-clockwise orientation (positive shoelace area).
    x, y = poly[:, 0], poly[:, 1]
    area2 = float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    assert area2 > 0.0
    # Central symmetry: -v is a vertex whenever v is.
    flipped = {(round(-vx, 9), round(-vy, 9)) for vx, vy in poly}
    orig = {(round(vx, 9), round(vy, 9)) for vx, vy in poly}
    assert flipped == orig


def test_covariance_from_params_validates():
    with pytest.raises(ValueError):
        covariance_from_params(-1.0, 2.0, 0.0)
    with pytest.raises(ValueError):
        covariance_from_params(1.0, 0.5, 0.0)
