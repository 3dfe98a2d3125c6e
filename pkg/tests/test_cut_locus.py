import csv
import io
import math

import pytest

from lengthlab import build
from lengthlab.cut_locus import (CSV_HEADER, RADII, RadiusReport, check_radius_chain,
                                 find_cut_points, fmt_radius, klingenberg_search, min_cut,
                                 minimizers, radius_report, reports_csv, sample_net, sym_cut,
                                 ult_cut, unique_inj)
from lengthlab.paths import make_point


def test_fmt_radius():
    assert fmt_radius(math.inf, 10) == ">=10"
    assert fmt_radius(1.5, 10) == "1.500000"


def test_minimizers_counts():
    T = build("flat_torus")
    assert len(minimizers(T, T.point("o"), T.point("c"))) == 2   # capped at two
    D = build("flat_disk")
    assert len(minimizers(D, D.point("o"), D.point("b"))) == 1


def test_flat_disk_has_empty_cut_loci():
    D = build("flat_disk")
    for p in sample_net(D, 2):
        assert not find_cut_points(D, p, 3.0).points
        assert not min_cut(D, p, 3.0).points


def test_sphere_cut_point_is_antipode():
    S = build("unit_sphere")
    rep = find_cut_points(S, S.point("n"), 4.0, n_dirs=4)
    assert rep.points
    for c in rep.points:
        assert c.distance == pytest.approx(math.pi, abs=1e-5)
        assert S.distance(c.q, S.point("s")) < 1e-5
        assert len(c.geodesics) >= 2
    mc = min_cut(S, S.point("n"), 4.0, n_dirs=4)
    assert mc.radius("minimal") == pytest.approx(math.pi, abs=1e-5)


def test_circle_radii():
    C = build("circle")
    rep = radius_report(C, C.point("p"), 8.0, ult_conj=False)
    for k in ("FirstInj", "UniqueInj", "MinRad", "SymInj", "UltInj"):
        assert rep[k] == pytest.approx(math.pi, abs=2e-3)
    assert rep.formatted("UltConj") == "skipped"


def test_pinned_sector_p1():
    S = build("pinned_sector")
    rep = radius_report(S, S.point("p1"), 10.0, ult_conj=False)
    assert rep["FirstInj"] == pytest.approx(math.pi, abs=2e-2)
    assert math.isinf(rep["MinRad"])
    assert rep.formatted("MinRad") == ">=10"


def test_sym_and_ult_cut_contain_cut_points():
    S = build("unit_sphere")
    p = S.point("e")
    sc = sym_cut(S, p, 3.5, n_dirs=4)
    uc = ult_cut(S, p, 3.5, n_dirs=4)
    assert uc.radius("ultimate") <= sc.radius("symmetric") + 1e-12
    assert sc.radius("symmetric") == pytest.approx(math.pi, abs=1e-3)


def test_rational_line_unique_inj():
    R = build("rational_line", depth=2)
    assert unique_inj(R, sample_n=1, horizon=1.5) <= 0.5 + R.eta


def test_unique_inj_needs_samples():
    with pytest.raises(ValueError):
        unique_inj(build("circle"), sample_n=0)


def _report(vals, horizon=10.0):
    full = {k: math.inf for k in RADII}
    full.update(vals)
    return RadiusReport("x", "*", horizon, full)


def test_chain_check_flags_violations():
    S = build("circle")
    ok = _report({"FirstInj": 1.0, "UniqueInj": 1.0, "SymInj": 1.0, "MinRad": 2.0, "UltInj": 0.5})
    assert check_radius_chain(S, ok, tol=1e-3).ok
    bad = _report({"FirstInj": 1.0, "UniqueInj": 1.5, "SymInj": 1.0, "MinRad": 2.0, "UltInj": 0.5})
    chk = check_radius_chain(S, bad, tol=1e-3)
    assert not chk.ok and "UniqueInj" in chk.violations[0]
    bad = _report({"FirstInj": 1.0, "UniqueInj": 1.0, "SymInj": 1.0, "MinRad": 0.5, "UltInj": 0.5})
    assert not check_radius_chain(S, bad, tol=1e-3).ok
    bad = _report({"FirstInj": 1.0, "UniqueInj": 1.0, "SymInj": 1.0, "MinRad": 2.0, "UltInj": 1.5})
    assert not check_radius_chain(S, bad, tol=1e-3).ok


def test_reports_csv_columns():
    rep = radius_report(build("circle"), build("circle").point("p"), 4.0, ult_conj=False,
                        point_name="p")
    rows = list(csv.reader(io.StringIO(reports_csv([rep]))))
    assert rows[0] == CSV_HEADER
    row = dict(zip(rows[0], rows[1]))
    assert row["point"] == "p" and row["horizon"] == "4"
    assert row["schedule"] and row["eta"]


def test_klingenberg_torus_loop():
    T = build("flat_torus")
    res = klingenberg_search(T)
    assert res.branch == "loop" and res.certified
    assert res.loop_length == pytest.approx(1.0, abs=1e-3)
    assert res.min_rad == pytest.approx(0.5, abs=1e-3)


def test_klingenberg_flat_disk_none():
    D = build("flat_disk")
    res = klingenberg_search(D, L_max=1.5)
    assert res.branch == "none" and math.isinf(res.min_rad)


def test_cube_probes_sit_near_corners():
    C = build("cube")
    probes = C.probe_points()
    assert len(probes) == len(C.special_points()) == 8
    for p in probes:
        assert min(C.distance(p, v) for v in C.special_points()) == pytest.approx(C.eta, abs=1e-9)
