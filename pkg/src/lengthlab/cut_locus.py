"""Cut points, the four cut loci, the five radii and the Klingenberg search.

Everything is sampled from geodesic rays leaving a base point.  Two
monotonicity facts make each ray cheap to analyse:

* minimality is downward closed: if gamma|[0,s] minimizes, so does every
  shorter initial piece;
* along a minimizing ray, being a cut point is upward closed: a second
  minimizing geodesic to gamma(s) continues along gamma to any later
  point up to where gamma stops minimizing.

So the loss-of-minimality parameter t_loss and the first cut parameter
t_cut are both found by bisection.  At t_loss itself the cut test uses a
small length slack, which realizes the closure clause of the first cut
locus.

Radii are math.inf when nothing was found below the horizon; reports
print them as ">= horizon".
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._base import TOL_GEO, ChartComplex
from .conjugacy import (DISTINCT, ShrinkSchedule, _pair_detector, _quick_ultimate,
                        default_schedule, detect_symmetric, detect_ultimate, ult_conj_radius)
from .geodesic_engine import certify_local, d_gamma, is_minimizing, shorten
from .paths import GeodesicPath, SpacePoint

BISECT = 40
FAMILY_EPS = 0.05
RADII = ("FirstInj", "UniqueInj", "MinRad", "SymInj", "UltInj", "UltConj")


def fmt_radius(value: float, horizon: float) -> str:
    if math.isinf(value):
        return f">={horizon:g}"
    return f"{value:.6f}"


# single-ray analysis

@dataclass
class RayInfo:
    ray: GeodesicPath
    t_loss: float                 # sup of s with ray|[0,s] minimizing
    extends: bool                 # the ray continues past t_loss
    t_cut: float                  # first cut parameter, inf if none
    cut_geodesics: List[GeodesicPath] = field(default_factory=list)
    extension: Optional[GeodesicPath] = None   # a non-minimizing piece just past t_loss


def _tol(d: float) -> float:
    return 10 * TOL_GEO * max(1.0, d)


def minimizers(space: ChartComplex, p: SpacePoint, q: SpacePoint, slack: float = 0.0) -> List[GeodesicPath]:
    """Distinct geodesics p -> q within slack (+ tolerance) of d(p, q)."""
    d = space.distance(p, q)
    lim = d + slack + _tol(d)
    # continuum families only need two members here, so sample them coarsely
    gs = [g for g in space.geodesics(p, q, lim, FAMILY_EPS) if g.length <= lim]
    out: List[GeodesicPath] = []
    for g in sorted(gs, key=lambda g: g.sort_key()):
        if all(d_gamma(g, h) > DISTINCT for h in out):
            out.append(g)
        if len(out) >= 2:
            break
    return out


def _is_cut(space, p, q, slack=0.0):
    return len(minimizers(space, p, q, slack)) >= 2


def _minimizing_upto(space, p, ray, s):
    if s <= 0:
        return True
    return space.distance(p, ray.at_length(s)) >= s - _tol(s)


def analyze_ray(space: ChartComplex, p: SpacePoint, ray: GeodesicPath, L_max: float,
                grid: int = 64) -> RayInfo:
    Lr = ray.length
    if Lr <= 0:
        return RayInfo(ray, 0.0, False, math.inf)
    ss = np.linspace(0.0, Lr, grid + 1)[1:]
    pts = [ray.at_length(float(s)) for s in ss]
    d = space.distances([p] * len(pts), pts)
    bad = np.nonzero(d < ss - np.array([_tol(s) for s in ss]))[0]
    extension = None
    if len(bad) == 0:
        t_loss, width = Lr, 0.0
        extends = False
    else:
        j = int(bad[0])
        lo = 0.0 if j == 0 else float(ss[j - 1])
        hi = float(ss[j])
        for _ in range(BISECT):
            mid = 0.5 * (lo + hi)
            if _minimizing_upto(space, p, ray, mid):
                lo = mid
            else:
                hi = mid
        t_loss, width = lo, hi - lo
        extends = True
        extension = ray.sub_length(0.0, hi)
    # cut test at the top of the minimizing stretch, with closure slack
    slack = max(_tol(t_loss), 4 * width)
    top = ray.at_length(t_loss)
    if t_loss <= 0:
        return RayInfo(ray, t_loss, extends, math.inf, [], extension)
    ms = minimizers(space, p, top, slack)
    if len(ms) < 2:
        return RayInfo(ray, t_loss, extends, math.inf, [], extension)
    lo, hi = 0.0, t_loss
    found_inside = False
    for _ in range(BISECT):
        mid = 0.5 * (lo + hi)
        if _is_cut(space, p, ray.at_length(mid)):
            hi, found_inside = mid, True
        else:
            lo = mid
        if hi - lo < 1e-7 * max(1.0, t_loss):
            break
    if found_inside:
        ms = minimizers(space, p, ray.at_length(hi)) or ms
    return RayInfo(ray, t_loss, extends, hi, ms, extension)


def _rays(space, p, L_max, n_dirs, max_rays=256):
    return [r for r in space.rays(p, L_max, n_dirs=n_dirs, max_rays=max_rays) if r.length > 0]


# reports

@dataclass
class CutPoint:
    q: SpacePoint
    distance: float
    geodesics: List[GeodesicPath]
    first: bool = False
    minimal: bool = False
    symmetric: bool = False
    ultimate: bool = False
    extension: Optional[GeodesicPath] = None


@dataclass
class CutReport:
    p: SpacePoint
    L_max: float
    points: List[CutPoint] = field(default_factory=list)
    caveats: List[str] = field(default_factory=list)

    def members(self, flag: str) -> List[CutPoint]:
        return [c for c in self.points if getattr(c, flag)]

    def radius(self, flag: str) -> float:
        ds = [c.distance for c in self.members(flag)]
        return min(ds) if ds else math.inf


def _path_key(g: GeodesicPath) -> tuple:
    # endpoints alone do not separate e.g. two meridians, so include the direction
    return tuple((c.chart, tuple(round(x, 9) for x in c.start.coords),
                  tuple(round(float(x), 9) for x in c.d0),
                  tuple(round(x, 9) for x in c.end.coords)) for c in g.pieces)


def _ray_infos(space, p, L_max, n_dirs):
    p = space.canonical(p)
    return p, [analyze_ray(space, p, r, L_max) for r in _rays(space, p, L_max, n_dirs)]


def find_cut_points(space: ChartComplex, p: SpacePoint, L_max: float, n_dirs: int = 16,
                    infos=None) -> CutReport:
    """First cut point along every sampled ray from p."""
    if L_max <= 0:
        raise ValueError("L_max must be positive")
    if infos is None:
        p, infos = _ray_infos(space, p, L_max, n_dirs)
    rep = CutReport(p, L_max)
    for info in infos:
        if math.isfinite(info.t_cut) and info.t_cut <= L_max:
            q = info.ray.at_length(info.t_cut)
            rep.points.append(CutPoint(q, space.distance(p, q), info.cut_geodesics, first=True))
    rep.points.sort(key=lambda c: c.distance)
    return rep


def min_cut(space: ChartComplex, p: SpacePoint, L_max: float, n_dirs: int = 16,
            infos=None) -> CutReport:
    """Points where an extensible minimizing ray stops minimizing."""
    if L_max <= 0:
        raise ValueError("L_max must be positive")
    if infos is None:
        p, infos = _ray_infos(space, p, L_max, n_dirs)
    rep = CutReport(p, L_max)
    for info in infos:
        if info.extends and info.t_loss < L_max:
            q = info.ray.at_length(info.t_loss)
            rep.points.append(CutPoint(q, info.t_loss, [info.ray.sub_length(0.0, info.t_loss)],
                                       minimal=True, extension=info.extension))
    rep.points.sort(key=lambda c: c.distance)
    return rep


def min_rad(space: ChartComplex, p: SpacePoint, L_max: float, n_dirs: int = 16) -> float:
    return min_cut(space, p, L_max, n_dirs).radius("minimal")


def _conj_scan(space, p, infos, schedule, cap, n_screen, ultimate):
    """Conjugate points along minimizing stretches of the rays, below cap."""
    out = []
    K = schedule.K
    seen = set()
    for info in infos:
        top = min(info.t_loss, cap)
        if top <= 0:
            continue
        ss = [top * j / n_screen for j in range(1, n_screen + 1)]
        if info.extends and info.t_loss <= cap and not math.isfinite(info.t_cut):
            ss.append(info.t_loss)
        # branching rays often share their whole minimizing stretch, and the
        # detectors are deterministic, so identical stretches are screened once
        key = (_path_key(info.ray.sub_length(0.0, top)), len(ss))
        if key in seen:
            continue
        seen.add(key)
        for s in ss:
            g = info.ray.sub_length(0.0, s)
            if ultimate:
                hit = _quick_ultimate(space, g, schedule) and detect_ultimate(space, g, schedule).positive
            else:
                hit = (_pair_detector(space, g, schedule, True, "symmetric", 2, levels=[K], n=6).positive
                       and detect_symmetric(space, g, schedule).positive)
            if hit:
                out.append(CutPoint(g.end, s, [g], symmetric=not ultimate, ultimate=True))
                break
    return out


def sym_cut(space: ChartComplex, p: SpacePoint, L_max: float, schedule: Optional[ShrinkSchedule] = None,
            n_dirs: int = 16, n_screen: int = 4, infos=None) -> CutReport:
    """Cut points plus symmetric conjugate points along minimizing geodesics."""
    schedule = schedule or default_schedule(space)
    if infos is None:
        p, infos = _ray_infos(space, p, L_max, n_dirs)
    rep = find_cut_points(space, p, L_max, infos=infos)
    for c in rep.points:
        c.symmetric = c.ultimate = True
    cap = min([L_max] + [c.distance for c in rep.points])
    rep.points += _conj_scan(space, p, infos, schedule, cap, n_screen, ultimate=False)
    rep.points.sort(key=lambda c: c.distance)
    return rep


def ult_cut(space: ChartComplex, p: SpacePoint, L_max: float, schedule: Optional[ShrinkSchedule] = None,
            n_dirs: int = 16, n_screen: int = 4, infos=None) -> CutReport:
    """SymCut plus ultimate conjugate points along minimizing geodesics."""
    schedule = schedule or default_schedule(space)
    if infos is None:
        p, infos = _ray_infos(space, p, L_max, n_dirs)
    rep = sym_cut(space, p, L_max, schedule, infos=infos, n_screen=n_screen)
    cap = min([L_max] + [c.distance for c in rep.points])
    rep.points += _conj_scan(space, p, infos, schedule, cap, n_screen, ultimate=True)
    rep.points.sort(key=lambda c: c.distance)
    return rep


def sym_inj(space, p, L_max, schedule=None, n_dirs=16) -> float:
    return sym_cut(space, p, L_max, schedule, n_dirs).radius("symmetric")


def ult_inj(space, p, L_max, schedule=None, n_dirs=16) -> float:
    return ult_cut(space, p, L_max, schedule, n_dirs).radius("ultimate")


# unique injectivity radius

def _nonunique_within(space, bases, r, n_dirs, ray_cache):
    for p in bases:
        done = set()
        for ray, t_loss in ray_cache[p]:
            s = min(r, t_loss, ray.length)
            if s <= 0:
                continue
            slack = max(_tol(s), 1e-8) if s >= t_loss else 0.0
            q = ray.at_length(s)
            if (q, slack) in done:
                continue
            done.add((q, slack))
            if _is_cut(space, p, q, slack):
                return True
    return False


def unique_inj(space: ChartComplex, sample_n: int = 2, horizon: Optional[float] = None,
               n_dirs: int = 8, bases: Optional[Sequence[SpacePoint]] = None, seed: int = 0,
               refine: int = 10, ray_cache: Optional[dict] = None) -> float:
    """Dyadic search for the largest r with unique minimizers at every sampled pair.

    Pairs are (p, gamma(s)) for rays gamma from each base point and s <= r
    along the minimizing stretch; by upward closure it suffices to test
    s = min(r, t_loss).
    """
    if sample_n < 1 and not bases:
        raise ValueError("sample_n must be at least 1")
    H = horizon if horizon is not None else space.horizon
    if bases is None:
        bases = sample_net(space, sample_n, seed)
    ray_cache = dict(ray_cache or {})
    bases = [space.canonical(p) for p in bases]
    for p in bases:
        if p in ray_cache:
            continue
        items = []
        for ray in _rays(space, p, H, n_dirs):
            items.append((ray, analyze_ray_loss(space, p, ray)))
        ray_cache[p] = items
    if not _nonunique_within(space, bases, H, n_dirs, ray_cache):
        return math.inf
    hi = H
    lo = H / 2
    while lo > 1e-9 and _nonunique_within(space, bases, lo, n_dirs, ray_cache):
        hi, lo = lo, lo / 2
    if lo <= 1e-9:
        return 0.0
    for _ in range(refine):
        mid = 0.5 * (lo + hi)
        if _nonunique_within(space, bases, mid, n_dirs, ray_cache):
            hi = mid
        else:
            lo = mid
    return lo


def analyze_ray_loss(space, p, ray, grid=64) -> float:
    """t_loss only (no cut analysis)."""
    Lr = ray.length
    ss = np.linspace(0.0, Lr, grid + 1)[1:]
    d = space.distances([p] * len(ss), [ray.at_length(float(s)) for s in ss])
    bad = np.nonzero(d < ss - np.array([_tol(s) for s in ss]))[0]
    if len(bad) == 0:
        return Lr
    j = int(bad[0])
    lo = 0.0 if j == 0 else float(ss[j - 1])
    hi = float(ss[j])
    for _ in range(BISECT):
        mid = 0.5 * (lo + hi)
        if _minimizing_upto(space, p, ray, mid):
            lo = mid
        else:
            hi = mid
    return lo


def sample_net(space: ChartComplex, n_random: int = 2, seed: int = 0) -> List[SpacePoint]:
    """Named, special and probe points, then seeded random points; duplicates removed."""
    rng = np.random.default_rng(seed)
    pts = list(space.named_points().values()) + list(space.special_points())
    pts += list(space.probe_points())
    pts += [space.random_point(rng) for _ in range(n_random)]
    out: List[SpacePoint] = []
    for x in pts:
        x = space.canonical(x)
        if all(x != y for y in out):
            out.append(x)
    return out


# radius reports

@dataclass
class RadiusReport:
    space: str
    point: str
    horizon: float
    values: Dict[str, float]
    caveats: List[str] = field(default_factory=list)
    schedule_hash: str = ""
    eta: float = 0.0
    tol_rad: float = 0.0
    ult_conj_horizon: float = math.inf

    def __getitem__(self, key):
        return self.values[key]

    def formatted(self, key: str) -> str:
        if key == "UltConj" and self.ult_conj_horizon == 0:
            return "skipped"
        h = self.ult_conj_horizon if key == "UltConj" else self.horizon
        return fmt_radius(self.values[key], h)

    def row(self) -> List[str]:
        return ([self.space, self.point, f"{self.horizon:g}"] + [self.formatted(k) for k in RADII]
                + [f"{self.eta:.6g}", self.schedule_hash, ";".join(self.caveats)])


CSV_HEADER = ["space", "point", "horizon"] + list(RADII) + ["eta", "schedule", "caveats"]


def reports_csv(reports: Sequence[RadiusReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def radius_report(space: ChartComplex, p: SpacePoint, horizon: Optional[float] = None,
                  schedule: Optional[ShrinkSchedule] = None, n_dirs: int = 16,
                  ult_conj: bool = True, ult_conj_dirs: int = 4, point_name: str = "") -> RadiusReport:
    """All radii at one point."""
    return _radius_report(space, p, horizon, schedule, n_dirs, ult_conj, ult_conj_dirs, point_name)[0]


def _radius_report(space, p, horizon, schedule, n_dirs, ult_conj, ult_conj_dirs, point_name):
    H = horizon if horizon is not None else space.horizon
    schedule = schedule or default_schedule(space)
    p, infos = _ray_infos(space, p, H, n_dirs)
    first = find_cut_points(space, p, H, infos=infos).radius("first")
    mrad = min_cut(space, p, H, infos=infos).radius("minimal")
    uc = ult_cut(space, p, H, schedule, infos=infos)
    sym = uc.radius("symmetric")
    ult = uc.radius("ultimate")
    uniq = unique_inj(space, bases=[p], horizon=H, n_dirs=n_dirs,
                      ray_cache={p: [(i.ray, i.t_loss) for i in infos]})
    vals = {"FirstInj": first, "UniqueInj": uniq, "MinRad": mrad, "SymInj": sym, "UltInj": ult}
    cap = H
    if ult_conj:
        res = ult_conj_radius(space, p, H, schedule, n_dirs=ult_conj_dirs)
        vals["UltConj"] = res.value
    else:
        vals["UltConj"] = math.inf
        cap = 0.0
    caveats = list(space.warnings())
    rep = RadiusReport(space.name, point_name or str(p), H, vals, caveats, schedule.hash,
                       space.eta, space.tol_rad, cap)
    return rep, p, infos


def global_radii(space: ChartComplex, horizon: Optional[float] = None,
                 schedule: Optional[ShrinkSchedule] = None, n_random: int = 2, n_dirs: int = 8,
                 ult_conj: bool = False, seed: int = 0) -> RadiusReport:
    """Infimum of each radius over the sample net."""
    H = horizon if horizon is not None else space.horizon
    schedule = schedule or default_schedule(space)
    net = sample_net(space, n_random, seed)
    vals = {k: math.inf for k in RADII}
    cache = {}
    for p in net:
        rep, p, infos = _radius_report(space, p, H, schedule, n_dirs, ult_conj, 4, "")
        cache[p] = [(i.ray, i.t_loss) for i in infos]
        for k in RADII:
            vals[k] = min(vals[k], rep.values[k])
    # a global pair search catches non-uniqueness between net points as well
    vals["UniqueInj"] = min(vals["UniqueInj"], unique_inj(space, bases=net, horizon=H, n_dirs=n_dirs,
                                                          ray_cache=cache))
    return RadiusReport(space.name, "*", H, vals, list(space.warnings()), schedule.hash,
                        space.eta, space.tol_rad, H if ult_conj else 0.0)


@dataclass
class ChainCheck:
    ok: bool
    violations: List[str]


def check_radius_chain(space: ChartComplex, report: RadiusReport,
                       cut: Optional[CutReport] = None, tol: Optional[float] = None) -> ChainCheck:
    """FirstInj = UniqueInj = SymInj <= MinRad and UltInj <= SymInj, within tol_rad.

    An unbounded radius only equals another unbounded radius.  With a
    CutReport carrying both MinCut and SymCut members, the sampled
    inclusion of MinCut in SymCut is checked up to eta.
    """
    tol = space.tol_rad if tol is None else tol
    v = report.values
    bad = []

    def eq(a, b):
        x, y = v[a], v[b]
        if math.isinf(x) or math.isinf(y):
            if math.isinf(x) != math.isinf(y):
                # a finite value beyond the horizon band is still "unbounded"
                fin = y if math.isinf(x) else x
                if fin < report.horizon - tol:
                    bad.append(f"{a}={x} != {b}={y}")
            return
        if abs(x - y) > tol:
            bad.append(f"{a}={x} != {b}={y}")

    def le(a, b):
        x, y = v[a], v[b]
        if x > y + tol:
            bad.append(f"{a}={x} > {b}={y}")

    eq("FirstInj", "UniqueInj")
    eq("UniqueInj", "SymInj")
    le("SymInj", "MinRad")
    le("UltInj", "SymInj")
    if cut is not None:
        syms = cut.members("symmetric")
        for m in cut.members("minimal"):
            if not any(space.distance(m.q, s.q) <= space.eta + tol for s in syms):
                bad.append(f"MinCut point at distance {m.distance:.6g} has no SymCut member nearby")
    return ChainCheck(not bad, bad)


# Klingenberg

@dataclass
class KlingenbergResult:
    branch: str                   # "ultimate" | "loop" | "none"
    min_rad: float
    p: Optional[SpacePoint] = None
    q: Optional[SpacePoint] = None
    pair_distance: float = math.nan
    loop: Optional[GeodesicPath] = None
    loop_length: float = math.nan
    certified: bool = False
    caveats: List[str] = field(default_factory=list)


def klingenberg_search(space: ChartComplex, L_max: Optional[float] = None,
                       schedule: Optional[ShrinkSchedule] = None, n_random: int = 2,
                       n_dirs: int = 16, seed: int = 0) -> KlingenbergResult:
    """Ultimate pair at distance MinRad, or a closed geodesic of length 2 MinRad."""
    H = L_max if L_max is not None else space.horizon
    schedule = schedule or default_schedule(space)
    best = None
    # only t_loss matters for the search, so skip the cut bisection here
    for p in sample_net(space, n_random, seed):
        p = space.canonical(p)
        for ray in _rays(space, p, H, n_dirs):
            t = analyze_ray_loss(space, p, ray)
            if t < ray.length and t < H:
                if best is None or t < best[2] - 1e-12:
                    best = (p, ray, t)
    if best is None:
        return KlingenbergResult("none", math.inf, caveats=[f"no MinCut point below {H:g}"])
    p, ray, r0 = best
    q = ray.at_length(r0)
    gamma = ray.sub_length(0.0, r0)
    verdict = detect_ultimate(space, gamma, schedule)
    res = KlingenbergResult("none", r0, p, q, space.distance(p, q))
    if verdict.positive:
        res.branch = "ultimate"
        res.certified = True
        res.caveats += verdict.caveats
        return res
    if verdict.inconclusive:
        res.caveats.append("conjugacy detection inconclusive")
    others = [g for g in minimizers(space, p, q, max(_tol(r0), 1e-8))
              if d_gamma(g, gamma) > DISTINCT]
    if not others:
        res.caveats.append("no second minimizing geodesic to the MinCut point")
        return res
    loop_pts = gamma.sample(9)[:-1] + others[0].reversed().sample(9)[:-1]
    sh = shorten(space, loop_pts, closed=True, strict=False)
    loop = sh.path
    res.branch = "loop"
    res.loop = loop
    res.loop_length = loop.length
    res.certified = (not sh.collapsed and sh.certified
                     and abs(loop.length - 2 * r0) <= max(space.tol_rad, 1e-3))
    return res
