"""Three closed hemispheres glued along their common equator.

A point is (page "H0" | "H1" | "H2", unit vector with z >= 0).  Equator
points live on H0.  Any two pages form a round unit sphere: reflect the
second page through the equator.  Geodesics therefore develop onto one
great circle of S^2; each time the developed circle crosses the equator
it may continue into either of the two pages other than the current one.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from . import _sphere as sph
from ._base import Chart, ChartComplex, Gluing
from ._glued import SphereGeom
from .paths import ArcPiece, GeodesicPath, GeodesicSet, make_point

PAGES = ("H0", "H1", "H2")
FLIP = np.array([1.0, 1.0, -1.0])
EQ_TOL = 1e-12


def _walks(m, first, last):
    """Page sequences of length m + 1, consecutive entries distinct."""
    firsts = PAGES if first is None else (first,)
    out = []
    for f in firsts:
        seqs = [(f,)]
        for _ in range(m):
            seqs = [s + (p,) for s in seqs for p in PAGES if p != s[-1]]
        out += [s for s in seqs if last is None or s[-1] == last]
    return out


class TripleHemisphere(ChartComplex):
    kind = "triple-hemisphere"

    def __init__(self, horizon: float = 10.0, max_pages: int = 4096):
        charts = [Chart(p, "spherical-polygon", {"curvature": 1.0, "region": "z>=0"}, math.pi)
                  for p in PAGES]
        glue = [Gluing("arc", tuple((p, "equator") for p in PAGES))]
        super().__init__("triple_hemisphere", charts, glue, math.pi / 2, 1.0, {}, horizon)
        self._sphere = SphereGeom("dev")
        self.max_pages = max_pages

    @staticmethod
    def on_equator(p) -> bool:
        return abs(p.coords[2]) <= EQ_TOL

    def canonical(self, p):
        if p.chart not in PAGES:
            raise ValueError(f"unknown page {p.chart!r}")
        v = sph.unit(p.coords)
        if v[2] < 0:
            if v[2] < -1e-9:
                raise ValueError("hemisphere points need z >= 0")
            v[2] = 0.0
        if abs(v[2]) <= EQ_TOL:
            v[2] = 0.0
            v = sph.unit(v)
            return make_point("H0", v)
        return make_point(p.chart, v)

    def _dev(self, p, q):
        """q developed into the sphere holding p's page upright."""
        b = np.asarray(q.coords)
        if p.chart == q.chart or self.on_equator(p) or self.on_equator(q):
            return b
        return b * FLIP

    def distance(self, p, q):
        p, q = self.canonical(p), self.canonical(q)
        return sph.angle(np.asarray(p.coords), self._dev(p, q))

    def distances(self, ps, qs):
        A = np.array([p.coords for p in ps], dtype=float)
        B = np.array([q.coords for q in qs], dtype=float)
        pa = np.array([p.chart for p in ps])
        pb = np.array([q.chart for q in qs])
        flip = (pa != pb) & (np.abs(A[:, 2]) > EQ_TOL) & (np.abs(B[:, 2]) > EQ_TOL)
        B = np.where(flip[:, None], B * FLIP, B)
        return sph.angles(A, B)

    # developed arcs -> page pieces
    @staticmethod
    def _segments(a, u, L):
        """Split the developed arc at equator crossings: list of (s0, s1, sign)."""
        az, uz = float(a[2]), float(u[2])
        R = math.hypot(az, uz)
        if R < 1e-12:
            return [(0.0, L, 0)]
        phi = math.atan2(uz, az)  # z(s) = R cos(s - phi)
        k0 = math.floor((-phi - math.pi / 2) / math.pi)
        k1 = math.ceil((L - phi - math.pi / 2) / math.pi)
        cuts = [phi + math.pi / 2 + k * math.pi for k in range(k0, k1 + 1)]
        cuts = sorted(s for s in cuts if 1e-9 < s < L - 1e-9)
        bounds = [0.0] + cuts + [L]
        segs = []
        for s0, s1 in zip(bounds[:-1], bounds[1:]):
            zm = R * math.cos(0.5 * (s0 + s1) - phi)
            segs.append((s0, s1, 1 if zm >= 0 else -1))
        return segs

    def _pieces(self, a, u, L, pages, segs):
        out = []
        for (s0, s1, sign), page in zip(segs, pages):
            x0 = sph.arc_point(a, u, s0)
            t0 = -math.sin(s0) * np.asarray(a) + math.cos(s0) * np.asarray(u)
            out.append(ArcPiece(page, x0, t0, s1 - s0, flip=sign < 0))
        return out

    def _expand(self, p, q, arc, route, out):
        a, u, L = arc.a, arc.u, arc.length
        segs = self._segments(a, u, L)
        if len(segs) == 1 and segs[0][2] == 0:
            walks = [("H0",)]
        else:
            first = None if self.on_equator(p) else p.chart
            last = None if self.on_equator(q) else q.chart
            if first is not None and segs[0][2] < 0:
                return
            walks = _walks(len(segs) - 1, first, last)
        for w in walks:
            if len(out) >= self.max_pages:
                out.truncated = True
                return
            out.append(GeodesicPath(self, self._pieces(a, u, L, w, segs), base=p,
                                    route=route + (w,)))

    def geodesics(self, p, q, L_max, eps_sep):
        p, q = self.canonical(p), self.canonical(q)
        a = np.asarray(p.coords)
        b = np.asarray(q.coords)
        targets = [b] if self.on_equator(q) else [b, b * FLIP]
        out = GeodesicSet()
        for ti, bt in enumerate(targets):
            for k, arc in enumerate(self._sphere.arcs(a, bt, L_max, eps_sep)):
                self._expand(p, q, arc, (ti, k), out)
        # a developed arc that ends on the wrong side lands on the other copy of q
        good = GeodesicSet()
        for g in out:
            if self.distance(g.end, q) < 1e-7:
                good.append(g)
        good.truncated = out.truncated
        good.sort(key=lambda g: g.sort_key())
        return good

    # rays
    def _shoot(self, base, items, length, max_rays):
        """items: (a, u, page, pieces, L0, route); a is developed upright on page."""
        queue = deque(items)
        res = []
        while queue and len(res) < max_rays:
            a, u, page, sign, pieces, L0, route = queue.popleft()
            rem = length - L0
            segs = self._segments(a, u, rem)
            s0, s1, sg = segs[0]
            if sg == 0:
                pcs = pieces + [ArcPiece("H0", a, u, rem)]
                res.append(self._ray(base, pcs, route))
                continue
            piece = ArcPiece(page, a, u, s1, flip=sg < 0)
            pcs = pieces + [piece]
            if len(segs) == 1:
                res.append(self._ray(base, pcs, route))
                continue
            x1 = sph.arc_point(a, u, s1)
            x1[2] = 0.0
            x1 = sph.unit(x1)
            t1 = -math.sin(s1) * a + math.cos(s1) * u
            for pg in PAGES:
                if pg != page:
                    queue.append((x1, t1, pg, -sg, pcs, L0 + s1, route + (pg,)))
        return res

    def _ray(self, base, pieces, route):
        g = GeodesicPath(self, pieces, base=base, route=route)
        g.stopped = False
        return g

    def _start_items(self, p, n_dirs):
        a = np.asarray(p.coords)
        items = []
        for k in range(n_dirs):
            u = sph.direction(a, 2 * math.pi * k / n_dirs)
            if self.on_equator(p):
                if abs(u[2]) < 1e-12:
                    items.append((a, u, "H0", 0, [], 0.0, (k,)))
                else:
                    for pg in PAGES:
                        items.append((a, u, pg, 1, [], 0.0, (k, pg)))
            else:
                items.append((a, u, p.chart, 1, [], 0.0, (k,)))
        return items

    def rays(self, p, length, n_dirs=16, minimizing_only=False, max_rays=512):
        p = self.canonical(p)
        return self._shoot(p, self._start_items(p, n_dirs), length, max_rays)

    def continuations(self, gamma, length, n_dirs=16):
        if gamma.is_trivial:
            return [(r.pieces, False) for r in self.rays(gamma.base, length, n_dirs)]
        last = gamma.pieces[-1]
        a = last.vec(last.length)
        u = last.d1
        if abs(a[2]) < 1e-9 and abs(u[2]) > 1e-12:
            a = a.copy()
            a[2] = 0.0
            a = sph.unit(a)
            items = [(a, u, pg, 1, [], 0.0, (pg,)) for pg in PAGES if pg != last.chart]
        else:
            items = [(a, u, last.chart, 1, [], 0.0, ())]
        res = self._shoot(gamma.start, items, length, 4096)
        return [(r.pieces, False) for r in res]

    def random_point(self, rng):
        v = sph.unit(rng.normal(size=3))
        v[2] = abs(v[2])
        return self.canonical(make_point(PAGES[int(rng.integers(3))], v))

    def random_step(self, p, r, rng):
        p = self.canonical(p)
        rho = r * math.sqrt(rng.uniform())
        a = np.asarray(p.coords)
        u = sph.direction(a, rng.uniform(0, 2 * math.pi))
        page = p.chart if not self.on_equator(p) else PAGES[int(rng.integers(3))]
        if self.on_equator(p) and u[2] < 0:
            u = u * FLIP
        rays = self._shoot(p, [(a, u, page, 1, [], 0.0, ())], rho, 8)
        return rays[int(rng.integers(len(rays)))].end

    def named_points(self):
        return {"n0": make_point("H0", [0, 0, 1]), "n1": make_point("H1", [0, 0, 1]),
                "n2": make_point("H2", [0, 0, 1]), "e": make_point("H0", [1, 0, 0])}
