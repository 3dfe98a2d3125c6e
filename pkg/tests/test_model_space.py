import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lengthlab.model_space import (DomainError, ModelPoint, angle_at, arc_chord_error,
                                   comparison_angle, comparison_points_distance,
                                   comparison_triangle, diameter_bound, exp_map,
                                   model_distance, orientation, origin, place_by_distances,
                                   point_along, polar_point, warping)

KAPPAS = (1.0, 0.0, -1.0, 4.0, -0.25)


# hand-derived oracles

def test_diameter():
    assert diameter_bound(1.0) == pytest.approx(math.pi)
    assert diameter_bound(4.0) == pytest.approx(math.pi / 2)
    assert math.isinf(diameter_bound(0.0))
    assert math.isinf(diameter_bound(-1.0))


def test_octant_triangle_has_right_angles():
    # three quarter circles bound one octant of the unit sphere
    tri = comparison_triangle(1.0, math.pi / 2, math.pi / 2, math.pi / 2)
    for a in tri.angles:
        assert a == pytest.approx(math.pi / 2, abs=1e-12)


def test_flat_345():
    tri = comparison_triangle(0.0, 3.0, 4.0, 5.0)
    # right angle at V1, between sides a=3 and b=4
    assert tri.angles[1] == pytest.approx(math.pi / 2, abs=1e-12)
    assert sum(tri.angles) == pytest.approx(math.pi, abs=1e-12)


def test_hyperbolic_equilateral_angle():
    # cosh a = (cos g + cos^2 g) / sin^2 g for an equilateral triangle with angle g
    a = 1.0
    g = comparison_angle(-1.0, a, a, a)
    rhs = (math.cos(g) + math.cos(g) ** 2) / math.sin(g) ** 2
    assert math.cosh(a) == pytest.approx(rhs, rel=1e-12)


def test_warping_values():
    assert warping(1.0, math.pi / 2) == pytest.approx(1.0)
    assert warping(0.0, 2.5) == 2.5
    assert warping(-1.0, 1.0) == pytest.approx(math.sinh(1.0))
    assert warping(4.0, math.pi / 4) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        warping(1.0, math.pi)


def test_arc_chord_flat_and_sphere():
    # flat: 2 (s - sqrt(s^2 - h^2)); at h = s this is 2 s
    assert arc_chord_error(0.0, 1.0, 1.0) == pytest.approx(2.0)
    assert arc_chord_error(0.0, 5.0, 3.0) == pytest.approx(2.0)
    # sphere: |s - acos(cos s / cos h)|
    s, h = 1.0, 0.3
    assert arc_chord_error(1.0, s, h) == pytest.approx(abs(s - math.acos(math.cos(s) / math.cos(h))))
    assert arc_chord_error(1.0, 1.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        arc_chord_error(0.0, 1.0, 2.0)


def test_degenerate_and_invalid_sides():
    assert comparison_angle(0.0, 0.0, 1.0, 1.0) == 0.0
    assert comparison_angle(0.0, 1.0, 1.0, 2.0) == pytest.approx(math.pi)
    with pytest.raises(DomainError):
        comparison_triangle(0.0, 1.0, 1.0, 3.0)
    with pytest.raises(DomainError):
        comparison_triangle(1.0, 2.0, 2.0, 2.5)     # perimeter above 2 pi
    with pytest.raises(DomainError):
        ModelPoint(1.0, (0.0, 0.0, 2.0))


def test_point_along_midpoint_sphere():
    a, b = origin(1.0), polar_point(1.0, math.pi / 2, 0.0)
    m = point_along(1.0, a, b, math.pi / 4)
    assert model_distance(1.0, a, m) == pytest.approx(math.pi / 4)
    assert model_distance(1.0, m, b) == pytest.approx(math.pi / 4)
    with pytest.raises(DomainError):
        point_along(1.0, a, b, 2.0)


# brute-force oracle for kappa = 1: length of the projected chord

def _great_circle_length(a, b):
    from scipy.integrate import quad

    def speed(t):
        v = (1 - t) * a + t * b
        n = np.linalg.norm(v)
        g = v / n
        dv = b - a
        return np.linalg.norm(dv - (g @ dv) * g) / n

    return quad(speed, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def test_sphere_distance_matches_integrator():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a, b = rng.normal(size=3), rng.normal(size=3)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        if a @ b < -0.999:
            continue
        d = model_distance(1.0, ModelPoint(1.0, tuple(a)), ModelPoint(1.0, tuple(b)))
        assert abs(d - _great_circle_length(a, b)) < 1e-7


# properties

side = st.floats(min_value=0.01, max_value=3.0)


@settings(max_examples=150, deadline=None)
@given(k=st.sampled_from(KAPPAS), a=side, b=side, t=st.floats(0.05, 0.95))
def test_triangle_round_trip(k, a, b, t):
    lo, hi = abs(a - b), a + b
    c = lo + t * (hi - lo)
    if a + b + c >= 2 * diameter_bound(k) * 0.999:
        return
    tri = comparison_triangle(k, a, b, c)
    V = tri.vertices
    assert model_distance(k, V[0], V[1]) == pytest.approx(a, abs=1e-9)
    assert model_distance(k, V[1], V[2]) == pytest.approx(b, abs=1e-9)
    assert model_distance(k, V[2], V[0]) == pytest.approx(c, abs=1e-9)
    assert angle_at(k, V[0], V[1], V[2]) == pytest.approx(tri.angles[0], abs=1e-7)
    assert orientation(k, *V) > 0


@settings(max_examples=80, deadline=None)
@given(k=st.sampled_from(KAPPAS), r=st.floats(0.0, 1.4), th=st.floats(-3, 3))
def test_polar_point_distance(k, r, th):
    p = polar_point(k, r, th)
    assert model_distance(k, origin(k), p) == pytest.approx(r, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(k=st.sampled_from(KAPPAS), t1=st.floats(0, 1), t2=st.floats(0, 1))
def test_comparison_points_triangle_inequality(k, t1, t2):
    tri = comparison_triangle(k, 1.0, 0.8, 0.7)
    d = comparison_points_distance(tri, 0, t1 * 1.0, 1, t2 * 0.8)
    # through the shared vertex V1
    assert d <= (1.0 - t1) + t2 * 0.8 + 1e-9


@settings(max_examples=60, deadline=None)
@given(k=st.sampled_from(KAPPAS), dp=st.floats(0.2, 1.0), dq=st.floats(0.2, 1.0))
def test_place_by_distances(k, dp, dq):
    p, q = origin(k), polar_point(k, 0.9, 0.0)
    if not (abs(dp - dq) < 0.9 < dp + dq):
        return
    x = place_by_distances(k, p, q, dp, dq, side=1)
    assert model_distance(k, p, x) == pytest.approx(dp, abs=1e-8)
    assert model_distance(k, q, x) == pytest.approx(dq, abs=1e-8)
    assert orientation(k, p, q, x) > 0


def test_exp_map_unit_speed():
    for k in KAPPAS:
        p = polar_point(k, 0.3, 1.0)
        q = polar_point(k, 0.7, -0.4)
        x = point_along(k, p, q, 0.2)
        assert model_distance(k, p, x) == pytest.approx(0.2, abs=1e-9)
        from lengthlab.model_space import _unit_tangent
        y = exp_map(k, p, _unit_tangent(k, p, q), 0.2)
        assert model_distance(k, x, y) < 1e-9
