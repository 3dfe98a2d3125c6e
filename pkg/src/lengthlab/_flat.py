"""Flat kernels: the square torus and cylinders glued along a common line."""
from __future__ import annotations

import itertools
import math
from collections import deque
from typing import List, Optional, Tuple

import numpy as np

from ._base import Chart, ChartComplex, Gluing
from .paths import GeodesicPath, GeodesicSet, LinePiece, SpacePoint, make_point

TWO_PI = 2 * math.pi


class FlatTorus(ChartComplex):
    """R^2 modulo the square lattice of the given side."""

    kind = "flat-torus"

    def __init__(self, side: float = 1.0, horizon: float = 10.0):
        if side <= 0:
            raise ValueError("torus side must be positive")
        self.side = float(side)
        chart = Chart("T", "flat-polygon", {"side": self.side}, self.side)
        glue = [Gluing("arc", (("T", "x=0"), ("T", "x=side"))),
                Gluing("arc", (("T", "y=0"), ("T", "y=side")))]
        super().__init__(f"flat_torus(side={side:g})", [chart], glue, self.side / 4, 0.0,
                         {"side": self.side}, horizon)
        self._period = (self.side, self.side)

    def canonical(self, p):
        x = np.asarray(p.coords, dtype=float) % self.side
        x[np.isclose(x, self.side, atol=1e-12)] = 0.0
        return make_point("T", x)

    def _delta(self, p, q):
        v = (np.asarray(q.coords) - np.asarray(p.coords)) % self.side
        return np.where(v > self.side / 2, v - self.side, v)

    def distance(self, p, q):
        return float(np.hypot(*self._delta(p, q)))

    def distances(self, ps, qs):
        A = np.array([p.coords for p in ps], dtype=float)
        B = np.array([q.coords for q in qs], dtype=float)
        v = (B - A) % self.side
        v = np.where(v > self.side / 2, v - self.side, v)
        return np.hypot(v[:, 0], v[:, 1])

    def geodesics(self, p, q, L_max, eps_sep, max_paths=20000):
        p, q = self.canonical(p), self.canonical(q)
        base = self._delta(p, q)
        k = int(math.ceil(L_max / self.side)) + 1
        out = GeodesicSet()
        for i in range(-k, k + 1):
            for j in range(-k, k + 1):
                v = base + self.side * np.array([i, j])
                L = float(np.hypot(*v))
                if L <= 1e-12 or L > L_max:
                    continue
                out.append(GeodesicPath(self, [LinePiece("T", p.coords, v / L, L, self._period)],
                                        base=p, route=((i, j),)))
        out.sort(key=lambda g: g.sort_key())
        if len(out) > max_paths:
            out = GeodesicSet(out[:max_paths])
            out.truncated = True
        return out

    def _ray(self, p, d, length, route):
        path = GeodesicPath(self, [LinePiece("T", p.coords, d, length, self._period)],
                            base=p, route=route)
        path.stopped = False
        return path

    def rays(self, p, length, n_dirs=16, minimizing_only=False, max_rays=512):
        p = self.canonical(p)
        out = []
        for k in range(min(n_dirs, max_rays)):
            t = TWO_PI * k / n_dirs
            out.append(self._ray(p, np.array([math.cos(t), math.sin(t)]), length, (k,)))
        return out

    def continuations(self, gamma, length, n_dirs=16):
        if gamma.is_trivial:
            return [(r.pieces, False) for r in self.rays(gamma.base, length, n_dirs)]
        last = gamma.pieces[-1]
        return [([LinePiece("T", last.end.coords, last.d1, length, self._period)], False)]

    def random_point(self, rng):
        return make_point("T", rng.uniform(0, self.side, size=2))

    def random_step(self, p, r, rng):
        rho = r * math.sqrt(rng.uniform())
        t = rng.uniform(0, TWO_PI)
        return self.canonical(make_point("T", np.asarray(p.coords) + rho * np.array([math.cos(t), math.sin(t)])))

    def named_points(self):
        return {"o": make_point("T", [0.0, 0.0]), "c": make_point("T", [self.side / 2] * 2)}


class CylinderLine(ChartComplex):
    """Cylinders of circumference 2 pi / j, j = 1..J, glued along one line.

    A point is (chart "C<j>", (theta, y)) with theta in [0, c_j) measured
    along the circle and y in [-window, window].  theta = 0 is the common
    line; its canonical chart is C1.  Geodesics are straight in the
    developed (width, y) plane.  Every crossing of the line may switch to
    any half-plane except the one just left, so a geodesic is a list of
    tokens (j, +-1), each crossing cylinder j once in that direction.
    """

    kind = "cylinder-line"

    def __init__(self, J: int, window: float = 3.0, horizon: float = 10.0):
        if J < 1:
            raise ValueError("J must be at least 1")
        self.J = int(J)
        self.window = float(window)
        self.circ = {j: TWO_PI / j for j in range(1, J + 1)}
        charts = [Chart(f"C{j}", "flat-polygon", {"circumference": c, "window": self.window}, c / 2)
                  for j, c in self.circ.items()]
        glue = [Gluing("arc", tuple((f"C{j}", "theta=0") for j in self.circ))]
        super().__init__(f"cylinder_line(J={J})", charts, glue, self.circ[self.J] / 4, 0.0,
                         {"J": self.J, "window": self.window}, horizon)

    # points
    def _j(self, p) -> int:
        return int(p.chart[1:])

    def canonical(self, p):
        j = self._j(p)
        if j not in self.circ:
            raise ValueError(f"unknown chart {p.chart!r}")
        c = self.circ[j]
        th = float(p.coords[0]) % c
        y = min(max(float(p.coords[1]), -self.window), self.window)
        if th < 1e-12 or c - th < 1e-12:
            return make_point("C1", [0.0, y])
        return make_point(p.chart, [th, y])

    def in_domain(self, p):
        return self._j(p) in self.circ and len(p.coords) == 2 and abs(p.coords[1]) <= self.window + 1e-12

    def on_line(self, p) -> bool:
        return p.chart == "C1" and p.coords[0] == 0.0

    # metric
    def distance(self, p, q):
        p, q = self.canonical(p), self.canonical(q)
        dy = q.coords[1] - p.coords[1]
        if self.on_line(p) or self.on_line(q) or p.chart != q.chart:
            w = self._to_line(p) + self._to_line(q)
        else:
            c = self.circ[self._j(p)]
            dt = abs(q.coords[0] - p.coords[0])
            w = min(dt, c - dt)
        return math.hypot(w, dy)

    def _to_line(self, p):
        if self.on_line(p):
            return 0.0
        c = self.circ[self._j(p)]
        return min(p.coords[0], c - p.coords[0])

    # developed geodesics
    def _legs(self, p, outgoing: bool):
        """Partial legs at an endpoint: (width, half-plane, direction sign).

        For the start, half-plane is where the path arrives on the line;
        for the end, it is the half-plane the path enters.
        """
        if self.on_line(p):
            return None
        j, c, th = self._j(p), self.circ[self._j(p)], p.coords[0]
        if outgoing:
            # moving +: reach theta=c, arrive in (j,-); moving -: arrive in (j,+)
            return [(c - th, (j, -1), 1), (th, (j, 1), -1)]
        # entering from the line through (j,+) covers width th, through (j,-) covers c - th
        return [(th, (j, 1), 1), (c - th, (j, -1), -1)]

    def _pieces(self, p, q, start_dir, tokens, end_leg, W, dy):
        """Chart pieces of the developed segment p -> q."""
        L = math.hypot(W, dy)
        if L == 0:
            return []
        sy = dy / L
        cx = W / L
        pieces = []
        y = p.coords[1]

        def add(chart, th0, sgn, width):
            nonlocal y
            s = width / cx if cx > 0 else 0.0
            if s <= 0:
                return
            c = self.circ[int(chart[1:])]
            pieces.append(LinePiece(chart, [th0, y], np.array([sgn * cx, sy]), s, (c, None)))
            y += s * sy

        if start_dir is not None:
            w0, _, sgn = start_dir
            add(p.chart, p.coords[0], sgn, w0)
        for j, sgn in tokens:
            c = self.circ[j]
            add(f"C{j}", 0.0 if sgn > 0 else c, sgn, c)
        if end_leg is not None:
            w1, (j, sgn), _ = end_leg
            c = self.circ[j]
            add(f"C{j}", 0.0 if sgn > 0 else c, sgn, w1)
        return pieces

    def geodesics(self, p, q, L_max, eps_sep, max_paths=20000):
        p, q = self.canonical(p), self.canonical(q)
        dy = q.coords[1] - p.coords[1]
        out = GeodesicSet()
        if abs(dy) > L_max:
            return out
        Wmax = math.sqrt(max(L_max ** 2 - dy ** 2, 0.0)) + 1e-12
        # direct segment inside one cylinder, no line crossing
        if not self.on_line(p) and not self.on_line(q) and p.chart == q.chart:
            dt = q.coords[0] - p.coords[0]
            w, sgn = abs(dt), (1 if dt > 0 else -1)
            if w <= Wmax and math.hypot(w, dy) > 1e-12:
                out.append(GeodesicPath(self, self._pieces(p, q, (w, None, sgn), [], None, w, dy),
                                        base=p, route=("direct",)))
        if self.on_line(p) and self.on_line(q) and abs(dy) > 1e-12:
            out.append(GeodesicPath(self, [LinePiece("C1", p.coords, np.array([0.0, math.copysign(1, dy)]),
                                                     abs(dy), (self.circ[1], None))],
                                    base=p, route=("line",)))
        starts = self._legs(p, True) or [(0.0, None, 0)]
        ends = self._legs(q, False) or [(0.0, None, 0)]
        tokens_all = [(j, s) for j in sorted(self.circ) for s in (1, -1)]
        cmin = min(self.circ.values())
        for st in starts:
            for en in ends:
                base_w = st[0] + en[0]
                if base_w > Wmax:
                    continue
                # DFS over token sequences
                stack = [((), st[1], base_w)]
                while stack:
                    seq, arrived, w = stack.pop()
                    valid = (en[1] is None or en[1] != arrived) and \
                        (bool(seq) or st[1] is not None or en[1] is not None)
                    if valid and w > 0:
                        pcs = self._pieces(p, q, st if st[1] is not None else None, list(seq),
                                           en if en[1] is not None else None, w, dy)
                        out.append(GeodesicPath(self, pcs, base=p, route=(st[2], seq, en[2])))
                        if len(out) > max_paths:
                            out.truncated = True
                            break
                    if w + cmin > Wmax:
                        continue
                    for tok in tokens_all:
                        if arrived is not None and tok == arrived:
                            continue
                        w2 = w + self.circ[tok[0]]
                        if w2 <= Wmax:
                            stack.append((seq + (tok,), (tok[0], -tok[1]), w2))
        out.sort(key=lambda g: g.sort_key())
        return out

    # rays
    def _shoot(self, items, p, length, max_rays):
        """items: (chart, theta0, y0, sgn, cx, sy, pieces, L0, arrived, route)."""
        queue = deque(items)
        out = []
        while queue and len(out) < max_rays:
            chart, th0, y0, sgn, cx, sy, pieces, L0, route = queue.popleft()
            j = int(chart[1:])
            c = self.circ[j]
            rem = length - L0
            # parameter to the line crossing and to the window edge
            s_line = math.inf
            if cx > 1e-15:
                width = (c - th0) if sgn > 0 else th0
                s_line = width / cx
            s_win = math.inf
            if sy > 1e-15:
                s_win = (self.window - y0) / sy
            elif sy < -1e-15:
                s_win = (-self.window - y0) / sy
            s = min(rem, s_line, s_win)
            pc = LinePiece(chart, [th0, y0], np.array([sgn * cx, sy]), s, (c, None))
            pcs = pieces + [pc]
            L1 = L0 + s
            if s >= rem - 1e-15:
                out.append(self._ray(p, pcs, route, False))
                continue
            if s_win <= s_line:
                out.append(self._ray(p, pcs, route, True))
                continue
            y1 = y0 + s * sy
            arrived = (j, -sgn)
            for k, (j2, s2) in enumerate((jj, ss) for jj in sorted(self.circ) for ss in (1, -1)):
                if (j2, s2) == arrived:
                    continue
                c2 = self.circ[j2]
                queue.append((f"C{j2}", 0.0 if s2 > 0 else c2, y1, s2, cx, sy, pcs, L1,
                              route + ((j2, s2),)))
        return out

    def _ray(self, p, pieces, route, stopped):
        g = GeodesicPath(self, pieces, base=p, route=route)
        g.stopped = stopped
        return g

    def rays(self, p, length, n_dirs=16, minimizing_only=False, max_rays=512):
        p = self.canonical(p)
        items = []
        angles = [math.pi * (k + 0.5) / n_dirs - math.pi / 2 for k in range(n_dirs)]
        if self.on_line(p):
            for j in sorted(self.circ):
                c = self.circ[j]
                for s in (1, -1):
                    for k, a in enumerate(angles):
                        items.append((f"C{j}", 0.0 if s > 0 else c, p.coords[1], s,
                                      math.cos(a), math.sin(a), [], 0.0, ((j, s, k),)))
            for sy in (1.0, -1.0):
                items.append(("C1", 0.0, p.coords[1], 1, 0.0, sy, [], 0.0, (("line", sy),)))
        else:
            for k in range(n_dirs):
                a = TWO_PI * k / n_dirs
                cx, sy = math.cos(a), math.sin(a)
                items.append((p.chart, p.coords[0], p.coords[1], 1 if cx >= 0 else -1,
                              abs(cx), sy, [], 0.0, ((k,),)))
        rays = self._shoot(items, p, length, max_rays)
        if minimizing_only:
            rays = [self._truncate_minimizing(r) for r in rays]
        return rays

    def _truncate_minimizing(self, ray):
        return ray

    def continuations(self, gamma, length, n_dirs=16):
        if gamma.is_trivial:
            return [(r.pieces, r.stopped) for r in self.rays(gamma.base, length, n_dirs)]
        last = gamma.pieces[-1]
        end = last.end
        c = self.circ[int(last.chart[1:])]
        dx, sy = float(last.d1[0]), float(last.d1[1])
        cx, sgn = abs(dx), (1 if dx >= 0 else -1)
        th = float(end.coords[0])
        if abs(dx) < 1e-15:
            items = [(last.chart, th, end.coords[1], 1, 0.0, sy, [], 0.0, ())]
        elif min(th, c - th) < 1e-9:
            j = int(last.chart[1:])
            arrived = (j, -sgn)
            items = []
            for j2 in sorted(self.circ):
                for s2 in (1, -1):
                    if (j2, s2) != arrived:
                        items.append((f"C{j2}", 0.0 if s2 > 0 else self.circ[j2], end.coords[1],
                                      s2, cx, sy, [], 0.0, ((j2, s2),)))
        else:
            items = [(last.chart, th, end.coords[1], sgn, cx, sy, [], 0.0, ())]
        res = self._shoot(items, gamma.start, length, 4096)
        return [(r.pieces, r.stopped) for r in res]

    def random_point(self, rng):
        j = int(rng.integers(1, self.J + 1))
        return self.canonical(make_point(f"C{j}", [rng.uniform(0, self.circ[j]),
                                                   rng.uniform(-self.window, self.window)]))

    def random_step(self, p, r, rng):
        p = self.canonical(p)
        rho = r * math.sqrt(rng.uniform())
        a = rng.uniform(0, TWO_PI)
        dx, dy = rho * math.cos(a), rho * math.sin(a)
        if self.on_line(p):
            j = int(rng.integers(1, self.J + 1))
            return self.canonical(make_point(f"C{j}", [dx % self.circ[j] if abs(dx) < self.circ[j] else 0.0,
                                                       p.coords[1] + dy]))
        c = self.circ[self._j(p)]
        th = p.coords[0] + dx
        if th < 0 or th > c:
            # crossed the line: continue into a random half-plane
            over = -th if th < 0 else th - c
            j = int(rng.integers(1, self.J + 1))
            cj = self.circ[j]
            over = min(over, cj)
            th = over if rng.uniform() < 0.5 else cj - over
            return self.canonical(make_point(f"C{j}", [th, p.coords[1] + dy]))
        return self.canonical(make_point(p.chart, [th, p.coords[1] + dy]))

    def special_points(self):
        return [make_point("C1", [0.0, 0.0])]

    def named_points(self):
        return {"o": make_point("C1", [0.0, 0.0])}
