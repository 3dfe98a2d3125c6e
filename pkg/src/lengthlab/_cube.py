"""Surface of the cube [0, e]^3.

Each face is a flat square chart with local coordinates (u, v) in
[0, e]^2 and a right-handed frame seen from outside.  Geodesics are
straight in face-sequence unfoldings and never pass through a corner;
rays that hit a corner stop there.
"""
from __future__ import annotations

import heapq
import math
from typing import Dict, List, Tuple

import numpy as np

from ._base import Chart, ChartComplex, Gluing
from .paths import GeodesicPath, GeodesicSet, LinePiece, make_point

# (origin, e1, e2) per face for the unit cube; scaled by the edge length
_FACES = {
    "F0": ((0, 0, 0), (0, 1, 0), (1, 0, 0)),  # z = 0
    "F1": ((0, 0, 1), (1, 0, 0), (0, 1, 0)),  # z = e
    "F2": ((0, 0, 0), (1, 0, 0), (0, 0, 1)),  # y = 0
    "F3": ((0, 1, 0), (0, 0, 1), (1, 0, 0)),  # y = e
    "F4": ((0, 0, 0), (0, 0, 1), (0, 1, 0)),  # x = 0
    "F5": ((1, 0, 0), (0, 1, 0), (0, 0, 1)),  # x = e
}
_LOCAL_CORNERS = [(0, 0), (1, 0), (1, 1), (0, 1)]
TOL = 1e-9


def _rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


class CubeSurface(ChartComplex):
    kind = "cube"

    def __init__(self, edge: float = 1.0, horizon: float = 10.0):
        if edge <= 0:
            raise ValueError("edge must be positive")
        self.e = float(edge)
        e = self.e
        self.faces = {}
        for f, (o, a, b) in _FACES.items():
            self.faces[f] = (e * np.array(o, float), np.array(a, float), np.array(b, float))
        charts = [Chart(f, "flat-polygon", {"edge": e}, e) for f in self.faces]
        # edges[f][k] = (neighbor face, local endpoints in f, local endpoints in neighbor)
        self.edges: Dict[str, List[Tuple[str, np.ndarray, np.ndarray, np.ndarray, np.ndarray]]] = {}
        glue = set()
        for f in self.faces:
            lst = []
            for k in range(4):
                P = e * np.array(_LOCAL_CORNERS[k], float)
                Q = e * np.array(_LOCAL_CORNERS[(k + 1) % 4], float)
                P3, Q3 = self.to3d(f, P), self.to3d(f, Q)
                g = next(g for g in self.faces if g != f and self._on_face(g, P3) and self._on_face(g, Q3))
                lst.append((g, P, Q, self.to_local(g, P3), self.to_local(g, Q3)))
                glue.add(tuple(sorted((f, g))))
            self.edges[f] = lst
        gluings = [Gluing("arc", ((a, "edge"), (b, "edge"))) for a, b in sorted(glue)]
        super().__init__(f"cube(edge={e:g})", charts, gluings, None, None, {"edge": e}, horizon,
                         nominal_scale=e / 4)

    # coordinates
    def to3d(self, f, x):
        o, a, b = self.faces[f]
        return o + x[0] * a + x[1] * b

    def to_local(self, f, X):
        o, a, b = self.faces[f]
        d = np.asarray(X, float) - o
        return np.array([d @ a, d @ b])

    def _face_data(self, f):
        cache = self.__dict__.setdefault("_fd", {})
        if f not in cache:
            o, a, b = self.faces[f]
            cache[f] = (tuple(map(float, o)), tuple(map(float, a)), tuple(map(float, b)),
                        tuple(map(float, np.cross(a, b))))
        return cache[f]

    def _on_face(self, f, X):
        o, a, b, n = self._face_data(f)
        d = (X[0] - o[0], X[1] - o[1], X[2] - o[2])
        if abs(d[0] * n[0] + d[1] * n[1] + d[2] * n[2]) > TOL:
            return False
        u = d[0] * a[0] + d[1] * a[1] + d[2] * a[2]
        v = d[0] * b[0] + d[1] * b[1] + d[2] * b[2]
        return -TOL <= u <= self.e + TOL and -TOL <= v <= self.e + TOL

    def memberships(self, p):
        X = self.to3d(p.chart, np.asarray(p.coords, float))
        out = []
        for f in sorted(self.faces):
            if self._on_face(f, X):
                out.append((f, np.clip(self.to_local(f, X), 0.0, self.e)))
        return out

    def canonical(self, p):
        if p.chart not in self.faces:
            raise ValueError(f"unknown face {p.chart!r}")
        c = p.coords
        m = 1e-9 * self.e
        if len(c) == 2 and m < c[0] < self.e - m and m < c[1] < self.e - m:
            # interior of a face: no other chart holds the point
            return p
        x = np.clip(np.asarray(c, float), 0.0, self.e)
        x = np.where(np.abs(x) < 1e-12, 0.0, x)
        x = np.where(np.abs(x - self.e) < 1e-12, self.e, x)
        f, y = self.memberships(make_point(p.chart, x))[0]
        return make_point(f, y)

    def embed(self, p):
        return self.to3d(p.chart, np.asarray(p.coords, float))

    def corners(self):
        e = self.e
        return [np.array([i, j, k], float) * e for i in (0, 1) for j in (0, 1) for k in (0, 1)]

    # unfolding search
    def _child_map(self, A, b, edge):
        g, Pf, Qf, Pg, Qg = edge
        P2, Q2 = A @ Pf + b, A @ Qf + b
        ang = math.atan2(*(Q2 - P2)[::-1]) - math.atan2(*(Qg - Pg)[::-1])
        R = _rot(ang)
        return g, R, P2 - R @ Pg

    @staticmethod
    def _seg_dist(p, P, Q):
        d = Q - P
        t = float(np.clip((p - P) @ d / (d @ d), 0.0, 1.0))
        return float(np.linalg.norm(P + t * d - p))

    def _search(self, p, q, L_max, best_only):
        """Straight unfoldings from p to q.  Returns [(length, start face, local dir)]."""
        mp = self.memberships(p)
        mq = self.memberships(q)
        found = []
        best = L_max
        heap = []
        counter = 0
        for f, x in mp:
            I = np.eye(2)
            z = np.zeros(2)
            for g, y in mq:
                if g == f:
                    v = y - x
                    L = float(np.hypot(*v))
                    if L <= best + 1e-12:
                        found.append((L, f, v / L if L > 1e-12 else np.array([1.0, 0.0])))
                        if best_only:
                            best = min(best, L)
            for k, edge in enumerate(self.edges[f]):
                P, Q = edge[1], edge[2]
                a1 = math.atan2(*(P - x)[::-1])
                a2 = math.atan2(*(Q - x)[::-1])
                w = _wrap(a2 - a1)
                if abs(w) < 1e-12 or np.linalg.norm(P - x) < 1e-12 or np.linalg.norm(Q - x) < 1e-12:
                    continue  # x lies on this edge
                lo, hi = (a1, a1 + w) if w > 0 else (a1 + w, a1)
                g, A2, b2 = self._child_map(I, z, edge)
                lb = self._seg_dist(x, P, Q)
                counter += 1
                heapq.heappush(heap, (lb, counter, f, x, g, A2, b2, lo, hi, (f, g), 1, k))
        expanded = 0
        while heap:
            lb, _, f0, x, g, A, b, lo, hi, seq, depth, _k = heapq.heappop(heap)
            if lb > best + 1e-12:
                if best_only:
                    break
                continue
            expanded += 1
            if expanded > 20000 or depth > 40:
                continue
            mid = 0.5 * (lo + hi)
            for g2, y in mq:
                if g2 != g:
                    continue
                v = A @ y + b - x
                L = float(np.hypot(*v))
                th = mid + _wrap(math.atan2(v[1], v[0]) - mid)
                if lo - 1e-12 <= th <= hi + 1e-12 and 1e-12 < L <= best + 1e-12:
                    found.append((L, f0, v / L))
                    if best_only:
                        best = min(best, L)
            came = seq[-2]
            for k, edge in enumerate(self.edges[g]):
                if edge[0] == came:
                    continue  # two faces of a cube share at most one edge
                P2, Q2 = A @ edge[1] + b, A @ edge[2] + b
                a1 = mid + _wrap(math.atan2(*(P2 - x)[::-1]) - mid)
                a2 = mid + _wrap(math.atan2(*(Q2 - x)[::-1]) - mid)
                e_lo, e_hi = min(a1, a2), max(a1, a2)
                n_lo, n_hi = max(lo, e_lo), min(hi, e_hi)
                if n_hi - n_lo < 1e-12:
                    continue
                lb2 = max(lb, self._seg_dist(x, P2, Q2))
                if lb2 > best + 1e-12:
                    continue
                h, A3, b3 = self._child_map(A, b, edge)
                counter += 1
                heapq.heappush(heap, (lb2, counter, f0, x, h, A3, b3, n_lo, n_hi, seq + (h,), depth + 1, k))
        return found

    # metric
    def distance(self, p, q):
        p, q = self.canonical(p), self.canonical(q)
        if p == q:
            return 0.0
        found = self._search(p, q, 4.0 * self.e, True)
        return min(f[0] for f in found)

    def geodesics(self, p, q, L_max, eps_sep):
        p, q = self.canonical(p), self.canonical(q)
        found = self._search(p, q, L_max, False)
        out = GeodesicSet()
        seen = set()
        for L, f, d in sorted(found, key=lambda t: (round(t[0], 9), t[1], round(t[2][0], 9))):
            if L <= 1e-12:
                continue
            x = dict(self.memberships(p))[f]
            path = self._trace(p, f, x, d, L)
            if path.stopped or path.length < L - 1e-9:
                continue
            key = (round(L, 8),) + tuple(np.round(self.embed(path.point_at(1e-3 / max(L, 1e-3))), 6))
            if key in seen:
                continue
            if self.distance(path.end, q) > 1e-7:
                continue
            seen.add(key)
            out.append(path)
        out.sort(key=lambda g: g.sort_key())
        return out

    # rays
    def _cross(self, f, k, x, d):
        """Carry point x on edge k of face f and direction d into the neighbor."""
        g = self.edges[f][k][0]
        o, a, b = self.faces[f]
        t3 = d[0] * a + d[1] * b
        X = self.to3d(f, x)
        P3 = self.to3d(f, self.edges[f][k][1])
        Q3 = self.to3d(f, self.edges[f][k][2])
        E = (Q3 - P3) / np.linalg.norm(Q3 - P3)
        cf = self.to3d(f, np.array([self.e / 2, self.e / 2]))
        cg = self.to3d(g, np.array([self.e / 2, self.e / 2]))
        mid = 0.5 * (P3 + Q3)
        Nf = (mid - cf) - ((mid - cf) @ E) * E
        Nf /= np.linalg.norm(Nf)
        Ng = (cg - mid) - ((cg - mid) @ E) * E
        Ng /= np.linalg.norm(Ng)
        t3g = (t3 @ E) * E + (t3 @ Nf) * Ng
        _, ag, bg = self.faces[g]
        return g, np.clip(self.to_local(g, X), 0.0, self.e), np.array([t3g @ ag, t3g @ bg])

    def _trace(self, base, f, x, d, length):
        pieces = []
        rem = length
        x = np.asarray(x, float)
        d = np.asarray(d, float) / np.linalg.norm(d)
        stopped = False
        for _ in range(10000):
            # exit parameter from the square
            s_exit, k_exit = math.inf, None
            for k, (axis, val) in enumerate(((1, 0.0), (0, self.e), (1, self.e), (0, 0.0))):
                if abs(d[axis]) < 1e-15:
                    continue
                s = (val - x[axis]) / d[axis]
                if s > 1e-12 and s < s_exit:
                    s_exit, k_exit = s, k
            s = min(s_exit, rem)
            pieces.append(LinePiece(f, x, d, s))
            rem -= s
            if rem <= 1e-12:
                break
            y = x + s * d
            y = np.clip(y, 0.0, self.e)
            at_bound = [abs(y[0]) < 1e-9, abs(y[0] - self.e) < 1e-9, abs(y[1]) < 1e-9, abs(y[1] - self.e) < 1e-9]
            if sum(at_bound) >= 2:
                stopped = True
                break
            f, x, d = self._cross(f, k_exit, y, d)
        path = GeodesicPath(self, pieces, base=base)
        path.stopped = stopped
        return path

    def _start_dirs(self, p, n_dirs):
        out = []
        for f, x in self.memberships(p):
            for k in range(n_dirs):
                t = 2 * math.pi * k / n_dirs + 1e-3
                d = np.array([math.cos(t), math.sin(t)])
                y = x + 1e-9 * d
                if np.all(y >= 0) and np.all(y <= self.e):
                    out.append((f, x, d))
        return out

    def rays(self, p, length, n_dirs=16, minimizing_only=False, max_rays=512):
        p = self.canonical(p)
        out = []
        for i, (f, x, d) in enumerate(self._start_dirs(p, n_dirs)[:max_rays]):
            r = self._trace(p, f, x, d, length)
            r.route = (i,)
            out.append(r)
        return out

    def continuations(self, gamma, length, n_dirs=16):
        if gamma.is_trivial:
            return [(r.pieces, r.stopped) for r in self.rays(gamma.base, length, n_dirs)]
        last = gamma.pieces[-1]
        end = np.asarray(last.end.coords, float)
        at_corner = sum([abs(end[0]) < 1e-9, abs(end[0] - self.e) < 1e-9,
                         abs(end[1]) < 1e-9, abs(end[1] - self.e) < 1e-9]) >= 2
        if at_corner:
            return []
        f, x, d = last.chart, end, last.d1
        # step over an edge if we stand on one heading out
        y = x + 1e-9 * d
        if not (np.all(y >= 0) and np.all(y <= self.e)):
            for k, (axis, val) in enumerate(((1, 0.0), (0, self.e), (1, self.e), (0, 0.0))):
                if abs(x[axis] - val) < 1e-9 and d[axis] * (1 if val > 0 else -1) > 0:
                    f, x, d = self._cross(f, k, x, d)
                    break
        r = self._trace(gamma.end, f, x, d, length)
        return [(r.pieces, r.stopped)]

    def random_point(self, rng):
        f = sorted(self.faces)[int(rng.integers(6))]
        return self.canonical(make_point(f, rng.uniform(0, self.e, size=2)))

    def random_step(self, p, r, rng):
        p = self.canonical(p)
        dirs = self._start_dirs(p, 32)
        f, x, _ = dirs[int(rng.integers(len(dirs)))]
        t = rng.uniform(0, 2 * math.pi)
        d = np.array([math.cos(t), math.sin(t)])
        y = x + 1e-9 * d
        if not (np.all(y >= 0) and np.all(y <= self.e)):
            d = -d
        r = self._trace(p, f, x, d, r * math.sqrt(rng.uniform()))
        return r.end

    def special_points(self):
        out = []
        for C in self.corners():
            for f in sorted(self.faces):
                if self._on_face(f, C):
                    out.append(make_point(f, self.to_local(f, C)))
                    break
        return out

    def in_domain(self, p):
        c = p.coords
        return p.chart in self.faces and len(c) == 2 and all(-1e-12 <= x <= self.e + 1e-12 for x in c)

    def probe_points(self):
        # corners have cone angle 3 pi / 2, so cut points of nearby points sit
        # arbitrarily close; one probe at distance eta per corner
        out = []
        off = self.eta / math.sqrt(2)
        for v in self.special_points():
            x = np.array(v.coords, dtype=float)
            inward = np.where(x < 0.5 * self.e, 1.0, -1.0)
            out.append(self.canonical(make_point(v.chart, x + off * inward)))
        return out

    def named_points(self):
        e = self.e
        return {"c0": make_point("F0", [e / 2, e / 2]), "v": self.special_points()[0]}
