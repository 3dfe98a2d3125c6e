"""Distances, geodesic enumeration, curve shortening and the d_Gamma metric.

Enumeration completeness is relative to each kernel's seeding family:
vertex and interface routes up to the length budget, great-circle arcs
with their 2 pi k wraps, and continuum families (antipodal or pole to
pole) sampled at spacing max(eps_sep, 2 pi / 4096).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._base import MAX_ITER, TOL_GEO, ChartComplex
from .paths import GeodesicPath, GeodesicSet, SpacePoint, trivial_path

DEFAULT_EPS_SEP = 10 * TOL_GEO
FILTER_LIMIT = 256


@dataclass(frozen=True)
class PathMetricSample:
    m: int
    sup: float
    length_gap: float
    d_gamma: float


class ShorteningError(RuntimeError):
    """Curve shortening did not converge within max_iter."""


@dataclass
class ShortenResult:
    path: GeodesicPath
    iterations: int
    collapsed: bool
    certified: bool
    lengths: List[float] = field(default_factory=list)


def distance(space: ChartComplex, p: SpacePoint, q: SpacePoint) -> float:
    return space.distance(p, q)


@lru_cache(maxsize=64)
def _nested_grid(m: int) -> np.ndarray:
    """Union of the uniform grids with 2..m points, so sup estimates grow with m."""
    ts = {0.0, 1.0}
    for j in range(2, m + 1):
        ts.update(k / (j - 1) for k in range(j))
    return np.array(sorted(ts))


def _eval(g: GeodesicPath, ts: np.ndarray) -> List[SpacePoint]:
    return [g.point_at(float(t)) for t in ts]


def gamma_distance(g1: GeodesicPath, g2: GeodesicPath, m: int = 17) -> PathMetricSample:
    """Sampled d_Gamma = sup_t d(g1(t), g2(t)) + |L1 - L2|."""
    if m < 2:
        raise ValueError("m must be at least 2")
    ts = _nested_grid(m) if m <= 200 else np.linspace(0.0, 1.0, m)
    sup = d_sup(g1, g2, ts)
    gap = abs(g1.length - g2.length)
    return PathMetricSample(m, sup, gap, sup + gap)


def d_sup(g1: GeodesicPath, g2: GeodesicPath, ts: np.ndarray) -> float:
    space = g1.space
    d = space.distances(_eval(g1, ts), _eval(g2, ts))
    return float(np.max(d)) if len(d) else 0.0


def d_gamma(g1: GeodesicPath, g2: GeodesicPath, m: int = 17) -> float:
    """Fast d_Gamma on a plain uniform grid (used inside the detectors)."""
    gap = abs(g1.length - g2.length)
    return d_sup(g1, g2, np.linspace(0.0, 1.0, m)) + gap


def separate(paths: Sequence[GeodesicPath], eps_sep: float, m: int = 17) -> GeodesicSet:
    """Greedy eps_sep-separated subset in the given order."""
    out = GeodesicSet()
    if len(paths) > FILTER_LIMIT:
        # kernels already emit distinct routes and family members spaced
        # at least eps_sep apart; pairwise filtering would be quadratic
        out.extend(paths)
        return out
    for g in paths:
        if all(abs(g.length - h.length) >= eps_sep or d_gamma(g, h, m) >= eps_sep for h in out):
            out.append(g)
    return out


def enumerate_geodesics(space: ChartComplex, p: SpacePoint, q: SpacePoint, L_max: float,
                        eps_sep: float = DEFAULT_EPS_SEP) -> GeodesicSet:
    """Local geodesics p -> q of length <= L_max, pairwise d_Gamma >= eps_sep."""
    if eps_sep <= 0:
        raise ValueError("eps_sep must be positive")
    raw = space.geodesics(p, q, L_max, eps_sep)
    out = separate(raw, eps_sep)
    out.truncated = raw.truncated
    return out


def certify_local(space: ChartComplex, gamma: GeodesicPath, tol: float = 10 * TOL_GEO) -> bool:
    """Every sampled subsegment of length <= delta_local realizes its distance."""
    if gamma.is_trivial:
        return True
    step = space.delta_local
    n = max(2, int(math.ceil(gamma.length / step)) + 1)
    s = np.linspace(0.0, gamma.length, n)
    pts = [gamma.at_length(float(x)) for x in s]
    closed = gamma.closed
    pairs_a, pairs_b, lens = [], [], []
    for i in range(n - 1):
        pairs_a.append(pts[i])
        pairs_b.append(pts[i + 1])
        lens.append(s[i + 1] - s[i])
    # overlapping windows catch corners sitting exactly on a sample
    mids = [gamma.at_length(float(0.5 * (s[i] + s[i + 1]))) for i in range(n - 1)]
    for i in range(n - 2):
        pairs_a.append(mids[i])
        pairs_b.append(mids[i + 1])
        lens.append(0.5 * (s[i + 2] - s[i]))
    if closed and n > 2:
        pairs_a.append(mids[-1])
        pairs_b.append(mids[0])
        lens.append(0.5 * (s[1] - s[0]) + 0.5 * (s[-1] - s[-2]))
    d = space.distances(pairs_a, pairs_b)
    return bool(np.all(d >= np.asarray(lens) - tol * max(1.0, gamma.length)))


def _midpoint(space, a, b):
    if a == b:
        return a
    return space.minimizing_geodesic(a, b).point_at(0.5)


def _assemble(space, pts, closed, base=None):
    pieces = []
    route = []
    seq = list(pts) + ([pts[0]] if closed else [])
    for a, b in zip(seq[:-1], seq[1:]):
        if a == b:
            continue
        g = space.minimizing_geodesic(a, b)
        pieces += g.pieces
        route.append(g.route)
    return GeodesicPath(space, pieces, base=pts[0], closed=closed, route=tuple(route))


def shorten(space: ChartComplex, polyline: Sequence[SpacePoint], closed: bool = False,
            max_iter: int = MAX_ITER, tol: float = TOL_GEO, strict: bool = True) -> ShortenResult:
    """Birkhoff shortening with alternating midpoint replacement.

    Endpoints stay fixed for open curves.  Raises ShorteningError when
    max_iter is reached with strict set, so non-convergence is never silent.
    """
    pts = [space.canonical(p) for p in polyline]
    if closed and len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    n = len(pts)
    if n < 2:
        return ShortenResult(trivial_path(space, pts[0]), 0, True, True, [0.0])
    if closed and n % 2:
        # an even count keeps the two alternating classes balanced
        seq = pts + [pts[0]]
        pts = []
        for a, b in zip(seq[:-1], seq[1:]):
            pts += [a, _midpoint(space, a, b)]
        n = len(pts)

    def total(ps):
        seq = ps + ([ps[0]] if closed else [])
        return float(sum(space.distance(a, b) for a, b in zip(seq[:-1], seq[1:])))

    lengths = [total(pts)]
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        for parity in (1, 0):
            idx = range(parity, n, 2) if closed else range(2 - parity, n - 1, 2)
            for i in idx:
                a, b = pts[(i - 1) % n], pts[(i + 1) % n]
                pts[i] = _midpoint(space, a, b)
        lengths.append(total(pts))
        if lengths[-2] - lengths[-1] < tol:
            converged = True
            break
    if not converged and strict:
        raise ShorteningError(f"shortening did not converge in {max_iter} iterations")
    L = lengths[-1]
    if L < tol:
        return ShortenResult(trivial_path(space, pts[0]), it, True, True, lengths)
    path = _assemble(space, pts, closed)
    return ShortenResult(path, it, False, certify_local(space, path), lengths)


def extend_geodesic(space: ChartComplex, gamma: GeodesicPath, delta: float,
                    eps_sep: float = DEFAULT_EPS_SEP) -> GeodesicSet:
    """All extensions of gamma by exactly delta that stay local geodesics."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    out = []
    for pieces, stopped in space.continuations(gamma, delta):
        ext = GeodesicPath(space, list(gamma.pieces) + list(pieces), base=gamma.start,
                           route=gamma.route)
        if stopped or ext.length < gamma.length + delta - 1e-9:
            continue
        out.append(ext)
    res = GeodesicSet()
    tail_list = [GeodesicPath(space, list(e.pieces[len(gamma.pieces):]), base=gamma.end) for e in out]
    chosen = separate(tail_list, eps_sep)
    chosen_ids = {id(t) for t in chosen}
    for e, t in zip(out, tail_list):
        if id(t) in chosen_ids:
            res.append(e)
    return res


def is_minimizing(space: ChartComplex, gamma: GeodesicPath, tol: float = TOL_GEO) -> bool:
    if gamma.is_trivial:
        return True
    return gamma.length <= space.distance(gamma.start, gamma.end) + tol * max(1.0, gamma.length)


def _random_segment(space, center, radius, length, rng):
    if center is None:
        p = space.random_point(rng)
    else:
        p = space.random_step(center, radius, rng)
    rays = space.rays(p, length, n_dirs=12, max_rays=64)
    rays = [r for r in rays if r.length > 0]
    if not rays:
        return None
    return rays[int(rng.integers(len(rays)))]


def uniform_minimizing_radius(space: ChartComplex, region: Optional[Tuple[SpacePoint, float]] = None,
                              samples: int = 200, rng: Optional[np.random.Generator] = None,
                              delta0: Optional[float] = None, levels: int = 12) -> float:
    """Largest delta on the dyadic ladder delta0 / 2^k whose samples all minimize.

    region is (center, radius); start points are drawn within
    min(radius, delta) of the center so the ladder probes ever smaller
    neighborhoods.  Returns 0.0 when every rung fails.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    d0 = delta0 if delta0 is not None else 2.0 * space.delta_local
    for k in range(levels):
        delta = d0 / 2 ** k
        ok = True
        for _ in range(samples):
            if region is None:
                seg = _random_segment(space, None, 0.0, delta * rng.uniform(0.5, 1.0), rng)
            else:
                c, rad = region
                seg = _random_segment(space, c, min(rad, delta), delta * rng.uniform(0.5, 1.0), rng)
            if seg is None:
                continue
            if not is_minimizing(space, seg, 1e-6):
                ok = False
                break
        if ok:
            return delta
    return 0.0


def polyline_path(space: ChartComplex, pts: Sequence[SpacePoint], closed: bool = False) -> GeodesicPath:
    """Concatenated minimizing segments through pts (a broken geodesic)."""
    pts = [space.canonical(p) for p in pts]
    if closed and len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(pts) < 2 or all(p == pts[0] for p in pts):
        return trivial_path(space, pts[0])
    return _assemble(space, pts, closed)
