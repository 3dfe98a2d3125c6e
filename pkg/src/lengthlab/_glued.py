"""Kernel for complexes whose charts meet only at isolated points.

Charts are segments, round spheres, spherical lunes and flat disks.  A
point gluing identifies finitely many chart points into one vertex.
Distances combine exact in-chart closed forms with an all-pairs table
over vertices; geodesics are enumerated as vertex routes whose turns are
locally minimizing.
"""
from __future__ import annotations

import math
from collections import deque
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, shortest_path

from . import _sphere as sph
from ._base import Chart, ChartComplex, Gluing
from .paths import (ArcPiece, GeodesicPath, GeodesicSet, LinePiece, SegPiece,
                    SpacePoint, make_point)

PI = math.pi
TWO_PI = 2 * math.pi
ANGLE_TOL = 1e-7
SAME_TOL = 1e-9
FAMILY_CAP = 4096


class SegmentGeom:
    kind = "segment-edge"
    dim = 1

    def __init__(self, cid: str, length: float):
        if length <= 0:
            raise ValueError("segment length must be positive")
        self.cid = cid
        self.L = float(length)
        self.params = {"length": self.L}
        self.diameter = self.L
        self.measure = self.L

    def normalize(self, x):
        return np.array([min(max(float(x[0]), 0.0), self.L)])

    def contains(self, x) -> bool:
        return -SAME_TOL <= x[0] <= self.L + SAME_TOL

    def direct(self, a, b):
        return abs(float(a[0]) - float(b[0]))

    def arcs(self, a, b, L_max, eps_sep):
        d = abs(b[0] - a[0])
        if d <= SAME_TOL or d > L_max:
            return []
        return [SegPiece(self.cid, a[0], 1 if b[0] > a[0] else -1, d)]

    def germ_dirs(self, x, n):
        out = []
        if x[0] < self.L - SAME_TOL:
            out.append(np.array([1.0]))
        if x[0] > SAME_TOL:
            out.append(np.array([-1.0]))
        return out

    def germ_valid(self, x, d) -> bool:
        return any(np.allclose(d, g) for g in self.germ_dirs(x, 2))

    def germ_angle(self, x, da, db) -> float:
        return 0.0 if da[0] * db[0] > 0 else PI

    def aim(self, x, y):
        if abs(y[0] - x[0]) <= SAME_TOL:
            return None
        return np.array([1.0 if y[0] > x[0] else -1.0])

    def trace(self, x, d, length, stops):
        x0, sgn = float(x[0]), float(d[0])
        end = self.L if sgn > 0 else 0.0
        best_s, event = abs(end - x0), "boundary"
        for vid, vx in stops:
            s = (vx[0] - x0) * sgn
            if SAME_TOL < s <= best_s + SAME_TOL:
                if s < best_s - SAME_TOL or event == "boundary":
                    best_s, event = min(s, best_s), vid
        if best_s >= length:
            return SegPiece(self.cid, x0, sgn, length), None
        return SegPiece(self.cid, x0, sgn, best_s), event

    def random(self, rng):
        return np.array([rng.uniform(0, self.L)])

    def random_dir(self, x, rng):
        g = self.germ_dirs(x, 2)
        return g[int(rng.integers(len(g)))]


class SphereGeom:
    kind = "spherical-polygon"
    dim = 2

    def __init__(self, cid: str):
        self.cid = cid
        self.params = {"curvature": 1.0}
        self.diameter = PI
        self.measure = 4 * PI

    def normalize(self, x):
        return sph.unit(x)

    def contains(self, x) -> bool:
        return True

    def direct(self, a, b):
        return sph.angle(a, b)

    def _candidate_arcs(self, a, b, L_max, eps_sep):
        out = []
        if sph.is_same(a, b):
            n = min(FAMILY_CAP, max(8, int(math.ceil(TWO_PI / max(eps_sep, 1e-12)))))
            for k in range(1, int(L_max // TWO_PI) + 1):
                for j in range(n):
                    out.append(ArcPiece(self.cid, a, sph.direction(a, TWO_PI * j / n), TWO_PI * k))
            return out
        if sph.is_antipodal(a, b):
            n = min(FAMILY_CAP, max(8, int(math.ceil(TWO_PI / max(eps_sep, 1e-12)))))
            lengths = [PI + TWO_PI * k for k in range(int((L_max - PI) // TWO_PI) + 1)] if L_max >= PI else []
            for length in lengths:
                for j in range(n):
                    out.append(ArcPiece(self.cid, a, sph.direction(a, TWO_PI * j / n), length))
            return out
        d = sph.angle(a, b)
        u = sph.tangent_toward(a, b)
        k = 0
        while d + TWO_PI * k <= L_max or TWO_PI - d + TWO_PI * k <= L_max:
            if d + TWO_PI * k <= L_max:
                out.append(ArcPiece(self.cid, a, u, d + TWO_PI * k))
            if TWO_PI - d + TWO_PI * k <= L_max:
                out.append(ArcPiece(self.cid, a, -u, TWO_PI - d + TWO_PI * k))
            k += 1
        return out

    def arcs(self, a, b, L_max, eps_sep):
        return self._candidate_arcs(a, b, L_max, eps_sep)

    def germ_dirs(self, x, n):
        return [sph.direction(x, TWO_PI * j / n) for j in range(n)]

    def germ_valid(self, x, d) -> bool:
        return True

    def germ_angle(self, x, da, db) -> float:
        return sph.angle(da, db)

    def aim(self, x, y):
        return sph.tangent_toward(x, y)

    def _stop_hits(self, x, u, stops):
        n = np.cross(x, u)
        hits = []
        for vid, v in stops:
            if abs(float(np.dot(v, n))) < 1e-9:
                s = math.atan2(float(np.dot(v, u)), float(np.dot(v, x))) % TWO_PI
                if s > SAME_TOL:
                    hits.append((s, vid))
        return hits

    def _exit(self, x, u, length):
        return None

    def trace(self, x, u, length, stops):
        hits = self._stop_hits(x, u, stops)
        ex = self._exit(x, u, length)
        if ex is not None:
            hits.append((ex, "boundary"))
        hits = [h for h in hits if h[0] <= length + SAME_TOL]
        if not hits:
            return ArcPiece(self.cid, x, u, length), None
        # vertices win ties against the boundary they sit on
        s, event = min(hits, key=lambda h: (round(h[0], 9), h[1] == "boundary"))
        return ArcPiece(self.cid, x, u, min(s, length)), event

    def random(self, rng):
        return sph.unit(rng.normal(size=3))

    def random_dir(self, x, rng):
        return sph.direction(x, rng.uniform(0, TWO_PI))


ARC_TOL = 1e-8


class LuneGeom(SphereGeom):
    """Closed region 0 <= longitude <= theta between the poles (0, 0, +-1)."""

    def __init__(self, cid: str, theta: float):
        if not 0 < theta < TWO_PI:
            raise ValueError("lune angle must lie in (0, 2 pi)")
        super().__init__(cid)
        self.theta = float(theta)
        self.params = {"curvature": 1.0, "angle": self.theta}
        self.measure = 2 * self.theta
        self.diameter = PI

    def _lon_ok(self, lon, tol=1e-9) -> bool:
        if lon > TWO_PI - tol:
            lon -= TWO_PI
        return -tol <= lon <= self.theta + tol

    def contains(self, x, tol=1e-9) -> bool:
        if math.hypot(x[0], x[1]) < 1e-9:
            return True
        return self._lon_ok(sph.longitude(x), tol)

    def _inside_arc(self, arc) -> bool:
        if self.theta <= PI and arc.length < PI - 1e-9:
            # a lune of angle <= pi is convex for minor arcs
            # arcs may end on a point placed at the edge; allow that rounding
            if self.contains(arc.a, ARC_TOL) and self.contains(sph.arc_point(arc.a, arc.u, arc.length), ARC_TOL):
                return True
        n = max(8, int(math.ceil(arc.length / 0.005)))
        s = np.linspace(0, arc.length, n + 1)
        X = np.outer(np.cos(s), arc.a) + np.outer(np.sin(s), arc.u)
        r = np.hypot(X[:, 0], X[:, 1])
        lon = np.arctan2(X[:, 1], X[:, 0]) % TWO_PI
        lon = np.where(lon > TWO_PI - ARC_TOL, lon - TWO_PI, lon)
        ok = (r < 1e-9) | ((lon >= -ARC_TOL) & (lon <= self.theta + ARC_TOL))
        return bool(ok.all())

    def direct(self, a, b):
        if sph.is_antipodal(a, b):
            return PI if self._pole(a) is not None else None
        arcs = self._candidate_arcs(a, b, sph.angle(a, b) + 1e-12, 1.0)
        if arcs and self._inside_arc(arcs[0]):
            return arcs[0].length
        return None

    @staticmethod
    def _pole(x):
        if x[2] > 1 - 1e-12:
            return 1
        if x[2] < -1 + 1e-12:
            return -1
        return None

    def _meridian_dir(self, lon):
        return np.array([math.cos(lon), math.sin(lon), 0.0])

    def _lon_values(self, n):
        m = max(2, int(math.ceil(n * self.theta / TWO_PI)) + 1)
        return list(np.linspace(0.0, self.theta, m))

    def arcs(self, a, b, L_max, eps_sep):
        if self._pole(a) is not None and self._pole(b) is not None and self._pole(a) != self._pole(b):
            m = min(FAMILY_CAP, max(2, int(math.ceil(self.theta / max(eps_sep, 1e-12))) + 1))
            out = []
            for lon in np.linspace(0.0, self.theta, m):
                for k in range(int((L_max - PI) // TWO_PI) + 1 if L_max >= PI else 0):
                    arc = ArcPiece(self.cid, a, self._meridian_dir(lon), PI + TWO_PI * k)
                    if k == 0 or self._inside_arc(arc):
                        out.append(arc)
            return out
        return [arc for arc in self._candidate_arcs(a, b, L_max, eps_sep) if self._inside_arc(arc)]

    def germ_dirs(self, x, n):
        if self._pole(x) is not None:
            return [self._meridian_dir(lon) for lon in self._lon_values(n)]
        dirs = [d for d in super().germ_dirs(x, n) if self.germ_valid(x, d)]
        lon = sph.longitude(x)
        if min(abs(lon), abs(lon - self.theta), abs(lon - TWO_PI)) < 1e-9:
            # the edge meridian, both ways
            up = sph.tangent_toward(x, sph.EZ)
            dirs += [up, -up]
        return dirs

    def germ_valid(self, x, d) -> bool:
        if self._pole(x) is not None:
            return self._lon_ok(sph.longitude(d))
        y = sph.unit(np.asarray(x) + 1e-7 * np.asarray(d))
        return self.contains(y)

    def germ_angle(self, x, da, db) -> float:
        if self._pole(x) is not None:
            la, lb = sph.longitude(da), sph.longitude(db)
            la = la - TWO_PI if la > TWO_PI - 1e-9 else la
            lb = lb - TWO_PI if lb > TWO_PI - 1e-9 else lb
            return abs(la - lb)
        return sph.angle(da, db)

    def _exit(self, x, u, length):
        step = 0.002
        n = max(2, int(math.ceil(length / step)) + 1)
        s = np.linspace(0.0, length, n)
        X = np.outer(np.cos(s), x) + np.outer(np.sin(s), u)
        r = np.hypot(X[:, 0], X[:, 1])
        lon = np.arctan2(X[:, 1], X[:, 0]) % TWO_PI
        lon = np.where(lon > TWO_PI - 1e-9, lon - TWO_PI, lon)
        inside = (r < 1e-9) | ((lon >= -1e-9) & (lon <= self.theta + 1e-9))
        bad = np.nonzero(~inside)[0]
        if len(bad) == 0:
            return None
        hi = s[bad[0]]
        lo = s[bad[0] - 1] if bad[0] > 0 else 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.contains(sph.arc_point(x, u, mid)):
                lo = mid
            else:
                hi = mid
        return lo

    def random(self, rng):
        z = rng.uniform(-1, 1)
        lon = rng.uniform(0, self.theta)
        r = math.sqrt(max(0.0, 1 - z * z))
        return np.array([r * math.cos(lon), r * math.sin(lon), z])

    def random_dir(self, x, rng):
        for _ in range(100):
            if self._pole(x) is not None:
                return self._meridian_dir(rng.uniform(0, self.theta))
            d = sph.direction(x, rng.uniform(0, TWO_PI))
            if self.germ_valid(x, d):
                return d
        return self.germ_dirs(x, 8)[0]


class DiskGeom:
    """Closed flat disk of radius R about the origin; R = inf is the plane."""

    kind = "flat-polygon"
    dim = 2

    def __init__(self, cid: str, radius: float = math.inf):
        self.cid = cid
        self.R = float(radius)
        self.params = {"radius": self.R}
        self.diameter = 2 * self.R
        self.measure = PI * self.R ** 2 if math.isfinite(self.R) else 100.0

    def normalize(self, x):
        x = np.asarray(x, dtype=float)[:2]
        n = float(np.hypot(*x))
        if math.isfinite(self.R) and n > self.R:
            x = x * (self.R / n)
        return x

    def contains(self, x) -> bool:
        return float(np.hypot(x[0], x[1])) <= self.R + SAME_TOL

    def direct(self, a, b):
        return float(np.hypot(*(np.asarray(b) - np.asarray(a))))

    def arcs(self, a, b, L_max, eps_sep):
        v = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        d = float(np.hypot(*v))
        if d <= SAME_TOL or d > L_max:
            return []
        return [LinePiece(self.cid, a, v / d, d)]

    def _on_boundary(self, x) -> bool:
        return math.isfinite(self.R) and float(np.hypot(x[0], x[1])) >= self.R - SAME_TOL

    def germ_dirs(self, x, n):
        dirs = [np.array([math.cos(TWO_PI * j / n), math.sin(TWO_PI * j / n)]) for j in range(n)]
        return [d for d in dirs if self.germ_valid(x, d)]

    def germ_valid(self, x, d) -> bool:
        if not self._on_boundary(x):
            return True
        return float(np.dot(x, d)) < -1e-12

    def germ_angle(self, x, da, db) -> float:
        c = float(np.clip(np.dot(da, db), -1.0, 1.0))
        return math.acos(c)

    def aim(self, x, y):
        v = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        n = float(np.hypot(*v))
        return None if n <= SAME_TOL else v / n

    def trace(self, x, d, length, stops):
        x = np.asarray(x, dtype=float)
        best, event = math.inf, None
        if math.isfinite(self.R):
            b = float(np.dot(x, d))
            disc = b * b - float(np.dot(x, x)) + self.R ** 2
            s = -b + math.sqrt(max(disc, 0.0))
            best, event = max(s, 0.0), "boundary"
        for vid, vx in stops:
            v = np.asarray(vx) - x
            s = float(np.dot(v, d))
            if s > SAME_TOL and abs(v[0] * d[1] - v[1] * d[0]) < 1e-9 and s <= best + SAME_TOL:
                best, event = s, vid
        if best >= length:
            return LinePiece(self.cid, x, d, length), None
        return LinePiece(self.cid, x, d, best), event

    def random(self, rng):
        R = self.R if math.isfinite(self.R) else 5.0
        r = R * math.sqrt(rng.uniform())
        t = rng.uniform(0, TWO_PI)
        return np.array([r * math.cos(t), r * math.sin(t)])

    def random_dir(self, x, rng):
        for _ in range(100):
            t = rng.uniform(0, TWO_PI)
            d = np.array([math.cos(t), math.sin(t)])
            if self.germ_valid(x, d):
                return d
        return -np.asarray(x) / np.linalg.norm(x)


Member = Tuple[str, np.ndarray]


_NCOORD = {"segment-edge": 1, "flat-polygon": 2, "spherical-polygon": 3}


class PointGluedComplex(ChartComplex):
    kind = "point-glued"

    def __init__(self, name: str, geoms: Sequence, vertices: Sequence[Sequence[Tuple[str, Sequence[float]]]],
                 named: Optional[Dict[str, SpacePoint]] = None, witness_delta=None,
                 cba_kappa=None, params=None, horizon=10.0, n_dirs=16):
        self.geoms = {g.cid: g for g in geoms}
        charts = [Chart(g.cid, g.kind, dict(g.params), g.diameter) for g in geoms]
        self.vertices: List[List[Member]] = []
        for members in vertices:
            ms = sorted(((c, self.geoms[c].normalize(np.asarray(x, dtype=float))) for c, x in members),
                        key=lambda m: (m[0], tuple(m[1])))
            self.vertices.append(ms)
        gluings = [Gluing("point", tuple((c, ",".join(f"{v:.6g}" for v in x)) for c, x in ms))
                   for ms in self.vertices if len(ms) > 1]
        super().__init__(name, charts, gluings, witness_delta, cba_kappa, params, horizon)
        self.n_dirs = n_dirs
        self.chart_vertices: Dict[str, List[Tuple[int, np.ndarray]]] = {c: [] for c in self.geoms}
        for vid, ms in enumerate(self.vertices):
            for c, x in ms:
                self.chart_vertices[c].append((vid, x))
        self._ccache: Dict[SpacePoint, SpacePoint] = {}
        self._vtable: Dict[str, tuple] = {}
        self._mcache: Dict[SpacePoint, tuple] = {}
        self._named = {k: self.canonical(v) for k, v in (named or {}).items()}
        self._build_table()
        self._vcache: Dict[SpacePoint, np.ndarray] = {}
        self._scache: Dict[SpacePoint, list] = {}
        self._Dl = self.D.tolist()

    # vertex table
    def _build_table(self):
        V = len(self.vertices)
        W = np.full((V, V), np.inf)
        for c, lst in self.chart_vertices.items():
            g = self.geoms[c]
            for i, (vi, xi) in enumerate(lst):
                for vj, xj in lst[i + 1:]:
                    if vi == vj:
                        continue
                    d = g.direct(xi, xj)
                    if d is not None and d < W[vi, vj]:
                        W[vi, vj] = W[vj, vi] = d
        if V:
            np.fill_diagonal(W, np.inf)
            self.D = shortest_path(csgraph_from_dense(W, null_value=np.inf), directed=False)
        else:
            self.D = np.zeros((0, 0))

    def _vid(self, chart: str, x) -> Optional[int]:
        table = self._vtable.get(chart)
        if table is None:
            vs = self.chart_vertices.get(chart, [])
            arr = np.array([vx for _, vx in vs], dtype=float) if vs else None
            table = ([v for v, _ in vs], arr)
            self._vtable[chart] = table
        ids, arr = table
        if not ids:
            return None
        xs = np.asarray(x, dtype=float)
        d2 = ((arr - xs) ** 2).sum(axis=1)
        j = int(d2.argmin())
        if d2[j] < (SAME_TOL * 10) ** 2:
            return ids[j]
        return None

    def vertex_point(self, vid: int) -> SpacePoint:
        c, x = self.vertices[vid][0]
        return make_point(c, x)

    def in_domain(self, p: SpacePoint) -> bool:
        g = self.geoms.get(p.chart)
        if g is None or len(p.coords) != _NCOORD[g.kind]:
            return False
        return g.contains(np.asarray(p.coords, dtype=float))

    def canonical(self, p: SpacePoint) -> SpacePoint:
        hit = self._ccache.get(p)
        if hit is not None:
            return hit
        g = self.geoms.get(p.chart)
        if g is None:
            raise ValueError(f"unknown chart {p.chart!r} in space {self.name}")
        x = g.normalize(np.asarray(p.coords, dtype=float))
        vid = self._vid(p.chart, x)
        out = self.vertex_point(vid) if vid is not None else make_point(p.chart, x)
        if len(self._ccache) > 50000:
            self._ccache.clear()
        self._ccache[p] = out
        return out

    def _members(self, p: SpacePoint) -> Tuple[List[Member], Optional[int]]:
        hit = self._mcache.get(p)
        if hit is not None:
            return hit
        vid = self._vid(p.chart, p.coords)
        if vid is not None:
            out = (self.vertices[vid], vid)
        else:
            out = ([(p.chart, np.asarray(p.coords, dtype=float))], None)
        if len(self._mcache) > 50000:
            self._mcache.clear()
        self._mcache[p] = out
        return out

    def _vsparse(self, p: SpacePoint) -> List[Tuple[int, float]]:
        hit = self._scache.get(p)
        if hit is None:
            dv = self._vdist(p)
            hit = [(int(i), float(dv[i])) for i in np.nonzero(np.isfinite(dv))[0]]
            if len(self._scache) > 20000:
                self._scache.clear()
            self._scache[p] = hit
        return hit

    def _vdist(self, p: SpacePoint) -> np.ndarray:
        hit = self._vcache.get(p)
        if hit is not None:
            return hit
        out = np.full(len(self.vertices), np.inf)
        members, _ = self._members(p)
        for c, x in members:
            g = self.geoms[c]
            for vid, vx in self.chart_vertices[c]:
                d = g.direct(x, vx)
                if d is not None and d < out[vid]:
                    out[vid] = d
        if len(self._vcache) > 20000:
            self._vcache.clear()
        self._vcache[p] = out
        return out

    # metric
    def distance(self, p: SpacePoint, q: SpacePoint) -> float:
        p, q = self.canonical(p), self.canonical(q)
        if p == q:
            return 0.0
        best = math.inf
        mp, _ = self._members(p)
        mq, _ = self._members(q)
        for c, x in mp:
            for c2, y in mq:
                if c == c2:
                    d = self.geoms[c].direct(x, y)
                    if d is not None:
                        best = min(best, d)
        if self.vertices:
            Dl = self._Dl
            sq = self._vsparse(q)
            for i, a in self._vsparse(p):
                row = Dl[i]
                for j, b in sq:
                    v = a + row[j] + b
                    if v < best:
                        best = v
        return best

    def distances(self, ps, qs):
        if not self.vertices and len(self.geoms) == 1:
            g = next(iter(self.geoms.values()))
            if isinstance(g, SphereGeom) and not isinstance(g, LuneGeom):
                A = np.array([p.coords for p in ps], dtype=float)
                B = np.array([q.coords for q in qs], dtype=float)
                return sph.angles(A, B)
            if isinstance(g, DiskGeom):
                A = np.array([p.coords for p in ps], dtype=float)
                B = np.array([q.coords for q in qs], dtype=float)
                return np.hypot(*(A - B).T)
        return super().distances(ps, qs)

    # turns
    def _same_germ(self, a: Member, b: Member) -> bool:
        return a[0] == b[0] and float(np.linalg.norm(a[1] - b[1])) < SAME_TOL * 10

    def _turn_ok(self, inc, member: Member, d_out, strict: bool) -> bool:
        cid_in, y_in, d_in = inc
        if not self._same_germ((cid_in, y_in), member):
            return True
        ang = self.geoms[member[0]].germ_angle(member[1], -np.asarray(d_in), d_out)
        if strict:
            return ang > PI + ANGLE_TOL
        return ang >= PI - ANGLE_TOL

    # enumeration
    def geodesics(self, p, q, L_max, eps_sep, max_paths=20000, max_expand=200000):
        p, q = self.canonical(p), self.canonical(q)
        mp, p_vid = self._members(p)
        mq, q_vid = self._members(q)
        V = len(self.vertices)
        if V:
            dq = self._vdist(q)
            hq = (self.D + dq[None, :]).min(axis=1)
        else:
            hq = np.zeros(0)
        tol = 1e-9 * max(1.0, L_max)
        out = GeodesicSet()
        stack = [(mp, p_vid, None, [], 0.0, ())]
        expand = 0
        while stack:
            members, at_vid, inc, pieces, length, route = stack.pop()
            expand += 1
            if expand > max_expand or len(out) > max_paths:
                out.truncated = True
                break
            budget = L_max - length + tol
            for cid, x in members:
                g = self.geoms[cid]
                targets = []
                for vid, vx in self.chart_vertices[cid]:
                    if vid == at_vid and float(np.linalg.norm(vx - x)) < SAME_TOL * 10:
                        continue
                    if length + hq[vid] > L_max + tol and vid != q_vid:
                        continue
                    targets.append((vid, vx))
                if q_vid is None:
                    for c2, y in mq:
                        if c2 == cid:
                            targets.append((None, y))
                for vid, y in targets:
                    for k, arc in enumerate(g.arcs(x, y, budget, eps_sep)):
                        if inc is not None and not self._turn_ok(inc, (cid, x), arc.d0, strict=True):
                            continue
                        L2 = length + arc.length
                        step = (cid, "q" if vid is None else f"v{vid}", k)
                        r2 = route + (step,)
                        if vid is None or vid == q_vid:
                            if L2 > tol:
                                out.append(GeodesicPath(self, pieces + [arc], base=p, route=r2))
                        if vid is not None and L2 + hq[vid] <= L_max + tol:
                            stack.append((self.vertices[vid], vid, (cid, y, arc.d1),
                                          pieces + [arc], L2, r2))
        out.sort(key=lambda g: g.sort_key())
        return out

    # rays
    def _germs(self, cid, x, n, at_vid):
        g = self.geoms[cid]
        dirs = list(g.germ_dirs(x, n))
        for vid, vx in self.chart_vertices[cid]:
            if vid == at_vid and float(np.linalg.norm(vx - x)) < SAME_TOL * 10:
                continue
            d = g.aim(x, vx)
            if d is None or any(float(np.abs(d - e).max()) < 1e-12 for e in dirs):
                continue
            if g.germ_valid(x, d):
                dirs.append(d)
        return dirs

    def _branch(self, vid, cid_in, y_in, d_in, n):
        out = []
        for c2, y in self.vertices[vid]:
            g = self.geoms[c2]
            cands = self._germs(c2, y, n, vid)
            same = self._same_germ((cid_in, y_in), (c2, y))
            if same and g.germ_valid(y, d_in):
                cands.append(np.asarray(d_in))
            for d in cands:
                if self._turn_ok((cid_in, y_in, d_in), (c2, y), d, strict=False):
                    out.append((c2, y, d))
        return out

    def _shoot(self, start_items, p, length, n_branch, minimizing_only, max_rays):
        queue = deque(start_items)
        results = []
        while queue and len(results) < max_rays:
            cid, x, d, pieces, L0, route = queue.popleft()
            g = self.geoms[cid]
            stops = [(vid, vx) for vid, vx in self.chart_vertices[cid]
                     if float(np.linalg.norm(vx - x)) > SAME_TOL * 10]
            piece, event = g.trace(x, d, max(length - L0, 0.0), stops)
            pcs = pieces + [piece]
            L1 = L0 + piece.length
            if event is None or L1 >= length - 1e-12:
                results.append(self._ray_path(p, pcs, route, False))
                continue
            if event == "boundary":
                results.append(self._ray_path(p, pcs, route, True))
                continue
            vid = event
            y_in = next(vx for v2, vx in self.chart_vertices[cid] if v2 == vid
                        and float(np.linalg.norm(np.asarray(piece.end.coords) - vx)) < 1e-6)
            if minimizing_only and L1 > self.distance(p, self.vertex_point(vid)) + 1e-7:
                results.append(self._ray_path(p, pcs, route, False))
                continue
            branches = self._branch(vid, cid, y_in, piece.d1, n_branch)
            if not branches:
                results.append(self._ray_path(p, pcs, route, True))
                continue
            # every queued item ends as at least one ray, so cap the pending
            # count; past the cap a ray keeps only its first branch
            room = max(1, max_rays - len(results) - len(queue))
            for k, (c2, y, d2) in enumerate(branches[:room]):
                queue.append((c2, y, d2, pcs, L1, route + ((vid, k),)))
        return results

    def _ray_path(self, p, pieces, route, stopped):
        path = GeodesicPath(self, pieces, base=p, route=route)
        path.stopped = stopped
        return path

    def rays(self, p, length, n_dirs=16, minimizing_only=False, max_rays=512):
        p = self.canonical(p)
        members, vid = self._members(p)
        items = []
        for cid, x in members:
            for k, d in enumerate(self._germs(cid, x, n_dirs, vid)):
                items.append((cid, x, d, [], 0.0, ((cid, k),)))
        return self._shoot(items, p, length, max(4, n_dirs // 2), minimizing_only, max_rays)

    def continuations(self, gamma, length, n_dirs=16):
        if gamma.is_trivial:
            return [(r.pieces, r.stopped) for r in self.rays(gamma.base, length, n_dirs)]
        last = gamma.pieces[-1]
        end = last.end
        cid = last.chart
        y = self.geoms[cid].normalize(np.asarray(end.coords))
        vid = self._vid(cid, y)
        if vid is None:
            items = [(cid, y, last.d1, [], 0.0, ())]
        else:
            items = [(c2, y2, d2, [], 0.0, ((vid, k),))
                     for k, (c2, y2, d2) in enumerate(self._branch(vid, cid, y, last.d1, n_dirs))]
        res = self._shoot(items, gamma.start, length, max(4, n_dirs // 2), False, 4096)
        return [(r.pieces, r.stopped) for r in res]

    # sampling
    def _chart_list(self):
        return sorted(self.geoms)

    def random_point(self, rng):
        cids = self._chart_list()
        cid = cids[int(rng.integers(len(cids)))]
        return self.canonical(make_point(cid, self.geoms[cid].random(rng)))

    def random_step(self, p, r, rng):
        p = self.canonical(p)
        members, vid = self._members(p)
        cid, x = members[int(rng.integers(len(members)))]
        g = self.geoms[cid]
        rho = r * math.sqrt(rng.uniform()) if g.dim == 2 else r * rng.uniform()
        d = g.random_dir(x, rng)
        remaining = rho
        for _ in range(64):
            stops = [(v, vx) for v, vx in self.chart_vertices[cid]
                     if float(np.linalg.norm(vx - x)) > SAME_TOL * 10]
            piece, event = g.trace(x, d, remaining, stops)
            remaining -= piece.length
            end = self.canonical(piece.end)
            if event is None or event == "boundary" or remaining <= 1e-12:
                return end
            y_in = self.geoms[cid].normalize(np.asarray(piece.end.coords))
            branches = self._branch(event, cid, y_in, piece.d1, 8)
            if not branches:
                return end
            cid, x, d = branches[int(rng.integers(len(branches)))]
            g = self.geoms[cid]
        return end

    def special_points(self):
        return [self.vertex_point(v) for v in range(len(self.vertices))]

    def named_points(self):
        return dict(self._named)
