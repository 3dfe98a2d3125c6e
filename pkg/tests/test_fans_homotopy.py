import math

import numpy as np
import pytest

from lengthlab.chart_spaces import build
from lengthlab.fans_homotopy import (FanError, band, build_fan, build_square_fan, constant_homotopy,
                                     fan_length_check, long_homotopy_audit, radial_contraction,
                                     random_polyline, rotate_to_pole)
from lengthlab.geodesic_engine import d_gamma
from lengthlab.paths import ArcPiece, GeodesicPath, make_point


def equator(S, closed=False):
    return GeodesicPath(S, [ArcPiece("S", np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), 2 * math.pi)],
                        base=S.point("e"), closed=closed)


@pytest.fixture(scope="module")
def sphere():
    return build("unit_sphere")


def test_fan_of_geodesic_reproduces_restrictions(sphere):
    g = sphere.rays(sphere.point("n"), 2.0, n_dirs=4)[0]
    f = build_fan(sphere, g, math.pi, n_samples=32)
    assert f.status == "completed"
    for s, h in zip(f.s, f.paths):
        assert abs(h.length - s) < 1e-9
        if s > 0:
            assert d_gamma(h, g.sub_length(0, s)) < 1e-9
    assert fan_length_check(f).ok


def test_equator_fan_hits_antipode(sphere):
    f = build_fan(sphere, equator(sphere), math.pi, n_samples=400)
    assert f.status == "hit_ultconj"
    assert math.pi - 0.05 <= f.limsup <= math.pi


@pytest.mark.parametrize("name", ["flat_torus", "circle_chord", "triple_hemisphere"])
def test_random_polyline_fans_are_short(name):
    sp = build(name)
    rng = np.random.default_rng(0)
    ub = math.pi if sp.cba_kappa is not None and sp.cba_kappa > 0 else math.inf
    for _ in range(5):
        f = build_fan(sp, random_polyline(sp, rng), ub, n_samples=32)
        assert fan_length_check(f).ok


def test_band_points_along_equator_fan(sphere):
    f = build_fan(sphere, equator(sphere).sub_length(0, 2.0), math.pi, n_samples=40)
    b = band(sphere, f, 0.5)
    # every fan geodesic is an equator arc, so H_r collapses to one point
    assert len(b.points) > 10 and b.max_gap < 1e-9


def test_square_fan_flat_constant():
    P = build("flat_plane")
    H = constant_homotopy(P, [make_point("P", [1, 0]), make_point("P", [1, 0.5]), make_point("P", [0.5, 0.5])], 4)
    sf = build_square_fan(P, H, math.inf)
    for t in range(H.T + 1):
        assert abs(sf.at(2, t).length - math.sqrt(0.5)) < 1e-12


def test_square_fan_cap_contraction(sphere):
    cap = [sphere.canonical(make_point("S", [math.sin(0.5) * math.cos(a), math.sin(0.5) * math.sin(a),
                                              math.cos(0.5)]))
           for a in np.linspace(0, 2 * math.pi, 17)]
    H = radial_contraction(sphere, sphere.point("n"), cap, 8)
    assert not H.issues()
    sf = build_square_fan(sphere, H, math.pi)
    assert max(g.length for row in sf.paths for g in row) <= 0.5 + 1e-9


def test_square_fan_rejects_long_rows(sphere):
    H = rotate_to_pole(sphere, 32, 16)
    with pytest.raises(FanError):
        build_square_fan(sphere, H, 1.0)


def test_long_homotopy_statuses(sphere):
    eq = equator(sphere, closed=True)
    H = rotate_to_pole(sphere, 32, 16)
    assert long_homotopy_audit(sphere, eq, H, math.pi).status == "precondition_length"
    r = long_homotopy_audit(sphere, eq, H, 4.0)
    assert r.status == "ult_bound_violation"
    assert abs(r.lowered_bound - math.pi) < 1e-6
    assert r.closed[:-1] == [True] * 16 and r.closed[-1] is False


def test_long_homotopy_rejects_bad_grid(sphere):
    H = rotate_to_pole(sphere, 4, 2)
    r = long_homotopy_audit(sphere, equator(sphere, closed=True), H, 4.0)
    assert r.status == "invalid_homotopy"
