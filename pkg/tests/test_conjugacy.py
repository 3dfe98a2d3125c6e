import math

import numpy as np
import pytest

from lengthlab import build
from lengthlab.conjugacy import (AB_RATIO, ABConfig, NearestFamily, ShrinkSchedule,
                                 build_family, default_schedule, detect_one_sided,
                                 detect_symmetric, detect_ultimate, detect_unreachable,
                                 extend_family_AB, family_uniqueness_check, ult_conj_radius)
from lengthlab.paths import make_point


@pytest.fixture(scope="module")
def sphere():
    return build("unit_sphere")


@pytest.fixture(scope="module")
def meridian(sphere):
    return min(sphere.geodesics(sphere.point("n"), sphere.point("s"), math.pi + 0.1, 0.1),
               key=lambda g: g.sort_key())


def test_default_schedule_shape(sphere):
    sch = default_schedule(sphere)
    assert sch.K == 4 and sch.n == 32
    r1 = sphere.delta_local
    assert sch.radii == pytest.approx((r1, r1 / 4, r1 / 16, r1 / 64))
    assert sch.taus == pytest.approx(tuple(8 * r for r in sch.radii))
    assert sch.mu == pytest.approx(10 * sch.taus[-1])
    assert sch.hash == default_schedule(sphere).hash
    assert sch.hash != default_schedule(sphere, seed=1).hash


def test_meridian_is_conjugate_every_way(sphere, meridian):
    sch = default_schedule(sphere)
    assert detect_one_sided(sphere, meridian, sch).kind == "one_sided"
    sym = detect_symmetric(sphere, meridian, sch)
    assert sym.kind == "symmetric" and sym.levels_completed == 4
    assert len(sym.witnesses) == 4
    assert detect_unreachable(sphere, meridian, sch).kind == "unreachable"
    ult = detect_ultimate(sphere, meridian, sch)
    assert ult.kind == "ultimate"
    assert set(ult.sub_kinds) == {"symmetric", "unreachable"}


@pytest.mark.parametrize("frac", [0.2, 0.5, 0.9])
def test_short_sphere_geodesics_are_not_conjugate(sphere, frac):
    sch = default_schedule(sphere)
    g = sphere.rays(sphere.point("n"), frac * math.pi, n_dirs=3)[1]
    assert detect_symmetric(sphere, g, sch).kind == "none"
    assert detect_unreachable(sphere, g, sch).kind == "none"
    assert not detect_ultimate(sphere, g, sch).positive


def test_flat_plane_has_no_conjugate_points():
    P = build("flat_plane")
    sch = default_schedule(P)
    g = P.minimizing_geodesic(make_point("P", [0, 0]), make_point("P", [3, 1]))
    assert detect_ultimate(P, g, sch).kind == "none"


def test_detectors_are_deterministic(sphere, meridian):
    sch = default_schedule(sphere)
    a = detect_symmetric(sphere, meridian, sch)
    b = detect_symmetric(sphere, meridian, sch)
    assert [str(w.p) for w in a.witnesses] == [str(w.p) for w in b.witnesses]


def test_ult_conj_radius_sphere(sphere):
    sch = default_schedule(sphere)
    res = ult_conj_radius(sphere, sphere.point("e"), 4.0, sch, n_dirs=2)
    assert res.bounded
    assert abs(res.value - math.pi) <= 5e-2
    assert res.lower <= res.value <= res.upper


def test_ult_conj_radius_flat_is_unbounded():
    T = build("flat_torus", horizon=2.0)
    sch = default_schedule(T)
    res = ult_conj_radius(T, T.point("o"), 1.0, sch, n_dirs=2)
    assert not res.bounded and str(res) == ">= 1"
    with pytest.raises(ValueError):
        ult_conj_radius(T, T.point("o"), 0.0, sch)


# families

def test_family_grid_short_geodesic(sphere):
    g = sphere.rays(sphere.point("e"), 1.0, n_dirs=3)[0]
    F = build_family(sphere, g, 0.01, 0.01, grid_n=1, n_dirs=4)
    assert not F.broken
    assert len(F.table) == len(F.U) * len(F.V)
    # the modulus of continuity is small on a small grid
    assert max(F.omega.values()) < 0.1
    F2 = build_family(sphere, g, 0.01, 0.01, grid_n=1, n_dirs=4)
    assert family_uniqueness_check(sphere, g, F, F2)


# Alexander-Bishop

def test_ab_constants():
    c1, c2 = ABConfig.constant_checks(0.1)
    assert c1 < 0.75 and c2 < 15 / 12
    # small-T0 limits: 1/2 and 7/6
    c1, c2 = ABConfig.constant_checks(1e-4)
    assert c1 == pytest.approx(0.5, abs=1e-6)
    assert c2 == pytest.approx(7 / 6, abs=1e-6)
    with pytest.raises(ValueError):
        ABConfig.from_lengths(0.05, 0.1)


def test_ab_iteration_on_sphere(sphere):
    T, T0 = 2 * math.pi / 3, 0.1
    cfg = ABConfig.from_lengths(T, T0)
    ray = sphere.rays(sphere.point("e"), T + T0 / 6, n_dirs=4)[1]
    rng = np.random.default_rng(0)
    u = sphere.random_step(ray.start, 0.9 * cfg.delta3, rng)
    w = sphere.random_step(ray.end, 0.9 * cfg.delta4, rng)
    res = extend_family_AB(sphere, NearestFamily(sphere, ray.sub_length(0, T), 0.2), ray, cfg, u, w)
    assert res.converged and not res.aborted and res.certified
    assert res.violations == 0
    assert max(res.ratios) <= AB_RATIO + 0.02
    assert res.path.length == pytest.approx(sphere.distance(u, w), abs=1e-5)


def test_ab_rejects_far_endpoints(sphere):
    cfg = ABConfig.from_lengths(1.0, 0.1)
    ray = sphere.rays(sphere.point("e"), 1.0 + 0.1 / 6, n_dirs=4)[0]
    with pytest.raises(ValueError):
        extend_family_AB(sphere, NearestFamily(sphere, ray, 0.2), ray, cfg,
                         sphere.point("n"), ray.end)
