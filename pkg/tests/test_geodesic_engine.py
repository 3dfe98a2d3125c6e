import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lengthlab import build
from lengthlab.geodesic_engine import (ShorteningError, certify_local, d_gamma,
                                       enumerate_geodesics, extend_geodesic, gamma_distance,
                                       is_minimizing, polyline_path, separate, shorten,
                                       uniform_minimizing_radius)
from lengthlab.paths import make_point


def lengths(gs):
    return sorted(round(g.length, 9) for g in gs)


# enumeration against hand counts

def test_torus_corner_has_four_minimizers():
    T = build("flat_torus")
    gs = enumerate_geodesics(T, T.point("o"), T.point("c"), 0.75)
    assert lengths(gs) == [round(math.sqrt(0.5), 9)] * 4


def test_torus_loops_of_length_one():
    T = build("flat_torus")
    gs = enumerate_geodesics(T, T.point("o"), T.point("o"), 1.01)
    assert lengths(gs) == [1.0] * 4


def test_line_pile_lengths():
    # segments of length 1 (unit), 4/3 and 3/2 join p and q below 1.5
    L = build("line_pile")
    gs = enumerate_geodesics(L, L.point("p"), L.point("q"), 1.5)
    assert lengths(gs) == [1.0, round(4 / 3, 9), 1.5]


def test_circle_antipode_windings():
    C = build("circle")
    gs = enumerate_geodesics(C, C.point("p"), C.point("a"), 10.0)
    assert lengths(gs) == [round(math.pi, 9)] * 2 + [round(3 * math.pi, 9)] * 2


def test_circle_chord_alternating_legs():
    S = build("circle_chord")
    gs = enumerate_geodesics(S, S.point("p1"), S.point("p2"), 4.0)
    assert lengths(gs) == [1.0, 1.0, 3.0, 3.0]


def test_sphere_quarter_points():
    S = build("unit_sphere")
    gs = enumerate_geodesics(S, S.point("e"), make_point("S", [0, 1, 0]), 7.0)
    assert lengths(gs) == [round(math.pi / 2, 9), round(3 * math.pi / 2, 9)]


def test_sphere_poles_family_is_separated():
    S = build("unit_sphere")
    eps = 0.1
    gs = enumerate_geodesics(S, S.point("n"), S.point("s"), 3.2, eps)
    assert len(gs) > 10
    for i, g in enumerate(gs):
        assert g.length == pytest.approx(math.pi)
        for h in list(gs)[:i]:
            assert d_gamma(g, h) >= eps - 1e-9


def test_flat_disk_is_uniquely_geodesic():
    D = build("flat_disk")
    gs = enumerate_geodesics(D, make_point("D", [0, 0]), make_point("D", [0.3, 0.4]), 5.0)
    assert len(gs) == 1 and gs[0].length == pytest.approx(0.5)


def test_eps_sep_must_be_positive():
    D = build("flat_disk")
    with pytest.raises(ValueError):
        enumerate_geodesics(D, D.point("o"), D.point("b"), 1.0, 0.0)


# d_Gamma

def test_gamma_distance_of_meridians():
    S = build("unit_sphere")
    gs = list(enumerate_geodesics(S, S.point("n"), S.point("s"), 3.2, 0.1))
    g, h = gs[0], gs[1]
    # two meridians at longitude gap phi are phi apart at the equator, zero gap in length
    a = np.array(g.point_at(0.5).coords)
    b = np.array(h.point_at(0.5).coords)
    phi = math.acos(max(-1.0, min(1.0, float(a @ b))))
    res = gamma_distance(g, h, 33)
    assert res.length_gap == pytest.approx(0.0, abs=1e-12)
    assert res.d_gamma == pytest.approx(phi, abs=1e-9)
    assert gamma_distance(g, g).d_gamma == 0.0
    with pytest.raises(ValueError):
        gamma_distance(g, h, 1)


def test_separate_drops_duplicates():
    T = build("flat_torus")
    gs = list(enumerate_geodesics(T, T.point("o"), T.point("c"), 0.75))
    assert len(separate(gs + gs, 1e-6)) == 4


# shortening

def test_shorten_open_polyline_to_segment():
    P = build("flat_plane")
    pts = [make_point("P", [0, 0]), make_point("P", [1, 2]), make_point("P", [2, -1]),
           make_point("P", [3, 0])]
    res = shorten(P, pts)
    assert not res.collapsed and res.certified
    assert res.path.length == pytest.approx(3.0, abs=1e-6)
    assert all(b <= a + 1e-12 for a, b in zip(res.lengths, res.lengths[1:]))


def test_shorten_contractible_loop_collapses():
    P = build("flat_plane")
    pts = [make_point("P", [math.cos(t), math.sin(t)]) for t in np.linspace(0, 2 * math.pi, 9)[:-1]]
    res = shorten(P, pts, closed=True, max_iter=5000)
    assert res.collapsed


def test_shorten_torus_loop_to_closed_geodesic():
    T = build("flat_torus")
    pts = [make_point("T", [x, 0.1 * math.sin(2 * math.pi * x)]) for x in np.linspace(0, 1, 9)[:-1]]
    res = shorten(T, pts, closed=True)
    assert not res.collapsed and res.certified
    assert res.path.length == pytest.approx(1.0, abs=1e-5)


def test_shorten_strict_raises():
    P = build("flat_plane")
    pts = [make_point("P", [0, 0]), make_point("P", [1, 5]), make_point("P", [2, -5]),
           make_point("P", [3, 5]), make_point("P", [4, 0])]
    with pytest.raises(ShorteningError):
        shorten(P, pts, max_iter=1)


# local certification, extension, minimality

def test_certify_local_and_minimizing():
    S = build("unit_sphere")
    ray = S.rays(S.point("n"), 4.0, n_dirs=4)[0]
    assert certify_local(S, ray)
    assert is_minimizing(S, ray.sub_length(0, 3.0))
    assert not is_minimizing(S, ray)
    broken = polyline_path(S, [S.point("n"), S.point("e"), make_point("S", [0, 1, 0])])
    assert not certify_local(S, broken)


def test_extend_geodesic_branches_at_vertex():
    # from the middle of the chord, extending past p2 offers arc1 and arc2
    S = build("circle_chord")
    g = S.minimizing_geodesic(S.point("m"), S.point("p2"))
    ext = extend_geodesic(S, g, 0.25)
    assert len(ext) == 2
    assert all(e.length == pytest.approx(g.length + 0.25) for e in ext)
    with pytest.raises(ValueError):
        extend_geodesic(S, g, 0.0)


def test_extend_stops_at_boundary():
    D = build("flat_disk")
    g = D.minimizing_geodesic(make_point("D", [0, 0]), make_point("D", [0.9, 0]))
    assert len(extend_geodesic(D, g, 0.5)) == 0
    assert len(extend_geodesic(D, g, 0.05)) == 1


def test_uniform_minimizing_radius_bounds():
    T = build("flat_torus")
    d = uniform_minimizing_radius(T, samples=60)
    # torus geodesics shorter than 1/2 minimize; the ladder starts at 2 delta_local = 1/4
    assert 0 < d <= 0.5


@settings(max_examples=40, deadline=None)
@given(x=st.floats(0, 0.99), y=st.floats(0, 0.99), u=st.floats(0, 0.99), v=st.floats(0, 0.99))
def test_torus_minimizing_geodesic_realizes_distance(x, y, u, v):
    T = build("flat_torus")
    p, q = make_point("T", [x, y]), make_point("T", [u, v])
    g = T.minimizing_geodesic(p, q)
    assert g.length == pytest.approx(T.distance(p, q), abs=1e-9)
    dx = min(abs(x - u), 1 - abs(x - u))
    dy = min(abs(y - v), 1 - abs(y - v))
    assert T.distance(p, q) == pytest.approx(math.hypot(dx, dy), abs=1e-9)
