import math

import numpy as np
import pytest

from lengthlab.chart_spaces import build
from lengthlab.rauch_bridges import (PreconditionError, angle_comparison_test, build_bridge,
                                     cat_triangle_test, develop_comparison_bridge, hemisphere_check,
                                     meridian_bridge, random_bridge, rauch_conjugate_bound_audit,
                                     rel_rauch_audit, rel_rauch_bound)


def test_meridian_bridge_height_equals_gap():
    # the struts close up at the pole; the widest strut spans the gap at the equator end
    S, g, s = meridian_bridge(0.1)
    b = build_bridge(S, g, s, N=8)
    assert abs(b.height - 0.1) < 1e-6


def test_meridian_limit_and_gap_shrink():
    limit = math.sin(0.5) / math.sin(1.0)
    gaps = []
    for h in (0.1, 0.05, 0.025):
        S, g, s = meridian_bridge(h)
        b = build_bridge(S, g, s, N=8, align=(0.5, 1.0))
        rec = rel_rauch_audit(b, 0.5, 1.0)
        assert rec.holds
        assert abs(rec.limit - limit) < 1e-9
        # lhs: ratio of meridian separations, exact on the sphere
        assert abs(rec.lhs - limit) < 1e-3
        gaps.append(rec.rhs - rec.limit)
    assert gaps[0] / gaps[1] >= 1.8 and gaps[1] / gaps[2] >= 1.8


def test_rel_rauch_bound_flat_is_linear_ratio():
    rhs, limit = rel_rauch_bound(0.0, 1e-9, 1.0, 2.0)
    assert abs(limit - 0.5) < 1e-12
    assert abs(rhs - 0.5) < 1e-6


def test_hemisphere_check():
    assert hemisphere_check(1.0, 0.01, 1.0)
    assert not hemisphere_check(math.pi, 0.01, 1.0)


def test_degenerate_bridge():
    S, g, _ = meridian_bridge(0.1)
    b = build_bridge(S, g, g, N=8)
    assert b.height < 1e-12
    assert develop_comparison_bridge(b).side_error < 1e-9


def test_comparison_bridge_sides_and_angles():
    S, g, s = meridian_bridge(0.1)
    cb = develop_comparison_bridge(build_bridge(S, g, s, N=8))
    assert cb.side_error < 1e-9
    assert cb.min_angle_sum() >= math.pi - 1e-6


@pytest.mark.parametrize("name", ["flat_plane", "unit_sphere", "triple_hemisphere"])
def test_random_bridges_hold(name):
    sp = build(name)
    rng = np.random.default_rng(3)
    n = 0
    for _ in range(25):
        x = random_bridge(sp, rng)
        if x is None:
            continue
        br, r, R = x
        n += 1
        assert rel_rauch_audit(br, r, R).holds
        cb = develop_comparison_bridge(br)
        assert cb.side_error < 1e-9
        assert cb.min_angle_sum() >= math.pi - 1e-6
    assert n >= 20


def test_bridge_requires_cba_bound():
    cube = build("cube")
    p = cube.random_point(np.random.default_rng(0))
    with pytest.raises(PreconditionError):
        random_bridge(cube, np.random.default_rng(0))
    S, g, s = meridian_bridge(0.1)
    with pytest.raises(PreconditionError):
        build_bridge(S, g, s, N=8, kappa=0.0)
    assert p is not None


@pytest.mark.parametrize("name,kappa,kw", [("unit_sphere", 1.0, {}), ("flat_plane", 0.0, {"radius": 1.0}),
                                           ("triple_hemisphere", 1.0, {})])
def test_cat_and_angle_certificates(name, kappa, kw):
    S = build(name)
    a = cat_triangle_test(S, kappa, 30, 20, **kw)
    b = angle_comparison_test(S, kappa, 30, **kw)
    assert a.ok and a.samples > 0
    assert b.ok and b.samples > 0


def test_flat_fails_hyperbolic_comparison():
    S = build("flat_plane")
    a = cat_triangle_test(S, -1.0, 30, 20, radius=1.0)
    assert not a.ok
    assert a.counterexample["d"] > a.counterexample["d_bar"]


def test_rauch_conjugate_audit_torus():
    rep = rauch_conjugate_bound_audit(build("flat_torus"), n_geodesics=20, horizon=3.0)
    assert rep.n == 20 and rep.violations == 0
