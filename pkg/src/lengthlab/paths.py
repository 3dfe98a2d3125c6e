"""Points and piecewise-chart curves shared by the space kernels."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class SpacePoint:
    chart: str
    coords: Tuple[float, ...]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def __str__(self):
        return f"{self.chart}:" + ",".join(f"{c:.6g}" for c in self.coords)


def make_point(chart: str, coords) -> SpacePoint:
    if isinstance(coords, np.ndarray):
        return SpacePoint(chart, tuple(coords.ravel().tolist()))
    return SpacePoint(chart, tuple(float(c) for c in np.ravel(coords)))


class Piece:
    """A geodesic arc inside one chart, parametrized by arclength."""

    chart: str
    length: float
    # unit tangents at both ends, in the chart's ambient coordinates
    d0: np.ndarray
    d1: np.ndarray

    def at(self, s: float) -> SpacePoint:
        raise NotImplementedError

    def sub(self, s0: float, s1: float) -> "Piece":
        raise NotImplementedError

    def reversed(self) -> "Piece":
        return self.sub(self.length, 0.0)

    @property
    def start(self) -> SpacePoint:
        return self.at(0.0)

    @property
    def end(self) -> SpacePoint:
        return self.at(self.length)


class ArcPiece(Piece):
    """Great-circle arc X(s) = cos(s/r) a + sin(s/r) u on a sphere of radius r.

    Coordinates are unit vectors.  With flip set, the stored point has its
    z coordinate negated (used for pages of glued hemispheres).
    """

    def __init__(self, chart, a, u, length, radius=1.0, flip=False):
        self.chart = chart
        self.a = np.asarray(a, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.length = float(length)
        self.radius = radius
        self.flip = flip
        self.d0 = self.u
        self.d1 = self._tangent(self.length)

    def _vec(self, s):
        t = s / self.radius
        v = math.cos(t) * self.a + math.sin(t) * self.u
        return v / math.sqrt(float(v @ v))

    def _tangent(self, s):
        t = s / self.radius
        return -math.sin(t) * self.a + math.cos(t) * self.u

    def vec(self, s):
        """Developed (unflipped) position."""
        return self._vec(s)

    def at(self, s):
        v = self._vec(s)
        if self.flip:
            v = v * np.array([1.0, 1.0, -1.0])
        return make_point(self.chart, v)

    def sub(self, s0, s1):
        a = self._vec(s0)
        u = self._tangent(s0)
        if s1 < s0:
            u = -u
        return ArcPiece(self.chart, a, u, abs(s1 - s0), self.radius, self.flip)


class LinePiece(Piece):
    """Straight segment in a flat chart, optionally reduced modulo a period."""

    def __init__(self, chart, a, d, length, period=None):
        self.chart = chart
        self.a = np.asarray(a, dtype=float)
        self.d0 = self.d1 = np.asarray(d, dtype=float)
        self.length = float(length)
        self.period = period

    def at(self, s):
        x = self.a + s * self.d0
        if self.period is not None:
            x = np.array([xi % p if p else xi for xi, p in zip(x, self.period)])
        return make_point(self.chart, x)

    def sub(self, s0, s1):
        d = self.d0 if s1 >= s0 else -self.d0
        return LinePiece(self.chart, self.a + s0 * self.d0, d, abs(s1 - s0), self.period)


class SegPiece(Piece):
    """Motion along a one-dimensional segment chart."""

    def __init__(self, chart, x0, sign, length):
        self.chart = chart
        self.x0 = float(x0)
        self.sign = 1.0 if sign >= 0 else -1.0
        self.length = float(length)
        self.d0 = self.d1 = np.array([self.sign])

    def at(self, s):
        return SpacePoint(self.chart, (self.x0 + self.sign * s,))

    def sub(self, s0, s1):
        sign = self.sign if s1 >= s0 else -self.sign
        return SegPiece(self.chart, self.x0 + self.sign * s0, sign, abs(s1 - s0))


class GeodesicPath:
    """Concatenation of chart pieces, parametrized proportionally to arclength on [0, 1]."""

    def __init__(self, space, pieces: Sequence[Piece], base: Optional[SpacePoint] = None,
                 closed: bool = False, route: tuple = ()):
        self.space = space
        self.pieces: List[Piece] = [p for p in pieces if p.length > 0]
        self.closed = closed
        self.route = tuple(route)
        self._cum = np.concatenate([[0.0], np.cumsum([p.length for p in self.pieces])])
        self.length = float(self._cum[-1])
        self._cuml = self._cum.tolist()
        if base is None:
            base = pieces[0].start if pieces else None
        self.base = space.canonical(base) if base is not None else None

    # evaluation
    def at_length(self, s: float) -> SpacePoint:
        if not self.pieces:
            return self.base
        s = min(max(s, 0.0), self.length)
        i = bisect.bisect_right(self._cuml, s) - 1
        i = min(max(i, 0), len(self.pieces) - 1)
        return self.space.canonical(self.pieces[i].at(s - self._cuml[i]))

    def point_at(self, t: float) -> SpacePoint:
        return self.at_length(t * self.length)

    def sample(self, m: int) -> List[SpacePoint]:
        return [self.point_at(t) for t in np.linspace(0.0, 1.0, m)]

    @property
    def start(self) -> SpacePoint:
        return self.point_at(0.0)

    @property
    def end(self) -> SpacePoint:
        return self.point_at(1.0)

    @property
    def is_trivial(self) -> bool:
        return not self.pieces

    # surgery
    def sub_length(self, s0: float, s1: float) -> "GeodesicPath":
        """Subpath between arclengths s0 <= s1."""
        s0 = min(max(s0, 0.0), self.length)
        s1 = min(max(s1, s0), self.length)
        out = []
        for p, c in zip(self.pieces, self._cum[:-1]):
            lo, hi = max(s0, c), min(s1, c + p.length)
            if hi > lo:
                out.append(p.sub(lo - c, hi - c))
        return GeodesicPath(self.space, out, base=self.at_length(s0), route=self.route)

    def sub(self, t0: float, t1: float) -> "GeodesicPath":
        return self.sub_length(t0 * self.length, t1 * self.length)

    def reversed(self) -> "GeodesicPath":
        pieces = [p.reversed() for p in reversed(self.pieces)]
        return GeodesicPath(self.space, pieces, base=self.end, closed=self.closed,
                            route=tuple(reversed(self.route)))

    def concat(self, other: "GeodesicPath", closed: bool = False) -> "GeodesicPath":
        return GeodesicPath(self.space, self.pieces + other.pieces, base=self.start,
                            closed=closed, route=self.route + other.route)

    def sort_key(self):
        return (round(self.length, 9), tuple(str(r) for r in self.route))

    def __repr__(self):
        return f"GeodesicPath(L={self.length:.6g}, pieces={len(self.pieces)}, route={self.route})"


def trivial_path(space, p: SpacePoint) -> GeodesicPath:
    return GeodesicPath(space, [], base=p)


class GeodesicSet(list):
    """List of paths that remembers whether enumeration hit its budget."""

    truncated: bool = False
