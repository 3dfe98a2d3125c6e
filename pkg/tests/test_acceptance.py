"""Acceptance criteria 1-10, one test per criterion.

Run with pytest (conftest prints one PASS/FAIL line per criterion in the
terminal summary) or directly: ``python3 tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
from scipy.integrate import quad

from lengthlab import model_space as ms
from lengthlab.chart_spaces import CATALOG, build
from lengthlab.conjugacy import (AB_RATIO, ABConfig, NearestFamily, default_schedule, detect_symmetric,
                                 detect_ultimate, detect_unreachable, extend_family_AB, ult_conj_radius)
from lengthlab.cut_locus import (check_radius_chain, find_cut_points, global_radii, klingenberg_search,
                                 min_cut, radius_report, sample_net, unique_inj)
from lengthlab.fans_homotopy import build_fan, fan_length_check, random_polyline
from lengthlab.geodesic_engine import d_gamma
from lengthlab.paths import ArcPiece, GeodesicPath
from lengthlab.rauch_bridges import (angle_comparison_test, build_bridge, cat_triangle_test, meridian_bridge,
                                     random_bridge, rauch_conjugate_bound_audit, rel_rauch_audit)


def _arc_length_oracle(a, b):
    """Length of the radial projection of the chord a -> b, by quadrature."""
    dv = b - a

    def speed(t):
        v = a + t * dv
        n = np.linalg.norm(v)
        g = v / n
        return np.linalg.norm(dv - (g @ dv) * g) / n

    return quad(speed, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def test_criterion_1():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    worst, n = 0.0, 0
    while n < 1000:
        a, b = rng.normal(size=3), rng.normal(size=3)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        if a @ b < -0.999:  # chord through the centre has no projection
            continue
        d = ms.model_distance(1.0, ms.ModelPoint(1.0, tuple(a)), ms.ModelPoint(1.0, tuple(b)))
        worst = max(worst, abs(d - _arc_length_oracle(a, b)))
        n += 1
    assert worst < 1e-7, worst

    worst_rt = 0.0
    for k in (1.0, 0.0, -1.0, 4.0, -0.25):
        D = ms.diameter_bound(k)
        for _ in range(200):
            a, b = rng.uniform(0.01, min(3.0, 0.6 * D), size=2)
            c = rng.uniform(abs(a - b), a + b)
            if a + b + c >= 2 * D * 0.999 or c < 1e-6:
                continue
            V = ms.comparison_triangle(k, a, b, c).vertices
            got = (ms.model_distance(k, V[0], V[1]), ms.model_distance(k, V[1], V[2]),
                   ms.model_distance(k, V[2], V[0]))
            worst_rt = max(worst_rt, *(abs(x - y) for x, y in zip(got, (a, b, c))))
    assert worst_rt < 1e-9, worst_rt
    assert time.time() - t0 < 10


def test_criterion_2():
    t0 = time.time()
    P = build("line_pile")
    assert abs(P.distance(P.point("p"), P.point("q")) - 1.0) < 1e-12

    S = build("pinned_sector")
    rep = radius_report(S, S.point("p1"), 10.0, ult_conj=False)
    assert abs(rep["FirstInj"] - math.pi) <= 2e-2
    assert rep["MinRad"] >= 10

    D = build("flat_disk")
    for p in sample_net(D, 2):
        assert not min_cut(D, p, 3.0).points
        assert not find_cut_points(D, p, 3.0).points

    for k, H in ((1, 2.0), (2, 2.0), (3, 1.0)):
        R = build("rational_line", depth=k)
        u = unique_inj(R, sample_n=1, horizon=H)
        assert u <= 1.0 / k + R.eta, (k, u)
    assert time.time() - t0 < 120


# (horizon, n_random, n_dirs); bounded so the whole sweep stays within minutes
CHAIN_SETTINGS = {
    "line_pile": (3.0, 1, 8), "pinned_sector": (4.0, 1, 8), "pinned_hemisphere": (4.0, 1, 8),
    "rational_line": (1.5, 1, 8), "circle": (4.0, 1, 8), "circle_chord": (3.0, 1, 8),
    "tetra_bisphere": (2.5, 1, 8), "triple_hemisphere": (4.0, 1, 8), "flat_disk": (3.0, 1, 8),
    "flat_plane": (3.0, 1, 8), "unit_sphere": (4.0, 1, 8), "cube": (0.6, 0, 8),
    "flat_torus": (1.5, 1, 8), "cylinder_line": (2.0, 1, 8),
}


def test_criterion_3():
    assert set(CHAIN_SETTINGS) == set(CATALOG)
    bad = {}
    for name, (H, n_random, n_dirs) in CHAIN_SETTINGS.items():
        S = build(name)
        rep = global_radii(S, H, n_random=n_random, n_dirs=n_dirs)
        chk = check_radius_chain(S, rep)
        if not chk.ok:
            bad[name] = chk.violations
    assert not bad, bad


def test_criterion_4():
    t0 = time.time()
    S = build("unit_sphere")
    sch = default_schedule(S)
    assert sch.K == 4
    n, s = S.point("n"), S.point("s")
    meridian = min(S.geodesics(n, s, math.pi + 0.1, 0.1), key=lambda g: g.sort_key())
    assert detect_symmetric(S, meridian, sch).kind == "symmetric"
    assert detect_unreachable(S, meridian, sch).kind == "unreachable"
    assert detect_ultimate(S, meridian, sch).kind == "ultimate"
    for frac in (0.3, 0.6, 0.9):
        for ray in S.rays(n, frac * math.pi, n_dirs=2):
            assert detect_symmetric(S, ray, sch).kind == "none"
            assert detect_unreachable(S, ray, sch).kind == "none"
    res = ult_conj_radius(S, S.point("e"), 4.0, sch, n_dirs=2)
    assert res.bounded and abs(res.value - math.pi) <= 5e-2, res.value
    assert time.time() - t0 < 180


def test_criterion_5():
    for name in ("unit_sphere", "triple_hemisphere", "flat_torus"):
        S = build(name)
        kw = {"horizon": 3.0} if name == "flat_torus" else {}
        rep = rauch_conjugate_bound_audit(S, n_geodesics=50, **kw)
        assert rep.n >= 50
        D = ms.diameter_bound(rep.kappa)
        assert max(rep.lengths) <= 0.9 * D + 1e-9
        assert rep.violations == 0, (name, rep.symmetric)


def test_criterion_6():
    total = 0
    for name, want in (("flat_plane", 70), ("flat_torus", 30), ("unit_sphere", 70), ("triple_hemisphere", 50)):
        S = build(name)
        rng = np.random.default_rng(11)
        got = 0
        for _ in range(3 * want):
            if got == want:
                break
            x = random_bridge(S, rng)
            if x is None:
                continue
            br, r, R = x
            rec = rel_rauch_audit(br, r, R)
            assert rec.lhs <= rec.rhs + 1e-6, (name, rec.to_dict())
            got += 1
        total += got
    assert total >= 200, total

    gaps = []
    for h in (0.1, 0.05, 0.025):
        S, g, s = meridian_bridge(h)
        rec = rel_rauch_audit(build_bridge(S, g, s, N=8, align=(0.5, 1.0)), 0.5, 1.0)
        assert rec.holds
        assert abs(rec.limit - math.sin(0.5) / math.sin(1.0)) < 1e-9
        gaps.append(rec.rhs - rec.limit)
    assert gaps[0] / gaps[1] >= 1.8 and gaps[1] / gaps[2] >= 1.8, gaps


def test_criterion_7():
    t0 = time.time()
    T, T0 = 2 * math.pi / 3, 0.1
    c1, c2 = ABConfig.constant_checks(T0)
    assert abs(c1 - math.sin(T0 / 6) / math.sin(2 * T0 / 6)) < 1e-15 and c1 < 0.75
    assert abs(c2 - (math.cos(T0 / 6) + math.sin(T0 / 6) / math.sin(T0))) < 1e-15 and c2 < 15 / 12
    S = build("unit_sphere")
    cfg = ABConfig.from_lengths(T, T0)
    ray = S.rays(S.point("e"), T + T0 / 6, n_dirs=4)[1]
    rng = np.random.default_rng(0)
    u = S.random_step(ray.start, 0.9 * cfg.delta3, rng)
    w = S.random_step(ray.end, 0.9 * cfg.delta4, rng)
    res = extend_family_AB(S, NearestFamily(S, ray.sub_length(0, T), 0.2), ray, cfg, u, w)
    assert res.converged and not res.aborted
    assert max(res.ratios) <= AB_RATIO + 0.02
    assert res.certified
    assert time.time() - t0 < 60


def _fan_bound(S):
    if S.cba_kappa is not None and S.cba_kappa > 0:
        return ms.diameter_bound(S.cba_kappa)
    return math.inf


def test_criterion_8():
    bad = []
    for name in CATALOG:
        S = build(name)
        rng = np.random.default_rng(0)
        for i in range(20):
            f = build_fan(S, random_polyline(S, rng), _fan_bound(S), n_samples=32)
            if not fan_length_check(f).ok:
                bad.append((name, i))
    assert not bad, bad

    S = build("unit_sphere")
    g = S.rays(S.point("n"), 2.0, n_dirs=4)[0]
    f = build_fan(S, g, math.pi, n_samples=32)
    assert f.status == "completed"
    tol = 10 * S.tol_geo
    for s, h in zip(f.s[1:], f.paths[1:]):
        assert abs(h.length - s) <= tol
        assert d_gamma(h, g.sub_length(0, s)) <= tol

    eq = GeodesicPath(S, [ArcPiece("S", np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), 2 * math.pi)],
                      base=S.point("e"))
    f = build_fan(S, eq, math.pi, n_samples=400)
    assert f.status == "hit_ultconj"
    assert math.pi - 0.05 <= f.limsup <= math.pi


def test_criterion_9():
    r = klingenberg_search(build("circle_chord", r0=1.0))
    assert r.branch == "loop" and abs(r.loop_length - 2.0) <= 1e-3, (r.branch, r.loop_length)
    r = klingenberg_search(build("flat_torus", side=1.0))
    assert r.branch == "loop" and abs(r.loop_length - 1.0) <= 1e-3, (r.branch, r.loop_length)
    r = klingenberg_search(build("unit_sphere"))
    assert r.branch == "ultimate" and abs(r.pair_distance - math.pi) <= 5e-2, (r.branch, r.pair_distance)


def test_criterion_10():
    cases = [("unit_sphere", 1.0, {}), ("flat_plane", 0.0, {"radius": 1.0}), ("flat_torus", 0.0, {}),
             ("triple_hemisphere", 1.0, {})]
    for name, k, kw in cases:
        S = build(name)
        for fn in (cat_triangle_test, angle_comparison_test):
            res = fn(S, k, 30, **kw)
            assert res.ok and res.samples > 0, (name, k, fn.__name__, res.to_dict())
    res = cat_triangle_test(build("flat_plane"), -1.0, 30, radius=1.0)
    assert not res.ok and res.counterexample is not None


if __name__ == "__main__":
    import sys
    failed = 0
    for i in range(1, 11):
        t = time.time()
        try:
            globals()[f"test_criterion_{i}"]()
            status = "PASS"
        except Exception as exc:  # noqa: BLE001 - report and move on
            status = f"FAIL ({type(exc).__name__}: {exc})"
            failed += 1
        print(f"criterion {i}: {status} [{time.time() - t:.1f} s]", flush=True)
    sys.exit(1 if failed else 0)
