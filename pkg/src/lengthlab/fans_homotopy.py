"""Fans along curves, square fans over homotopy grids, and the long-homotopy audit.

A fan of a curve C is a continuous family of geodesics sigma_s from C(0)
to C(s).  Here it is unfolded greedily: at each sample the candidate
closest in d_Gamma to the previous geodesic wins, and a failed step is
halved up to MAX_HALVINGS times before the fan is declared broken.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._base import TOL_GEO, ChartComplex
from .geodesic_engine import d_gamma, enumerate_geodesics, polyline_path
from .paths import GeodesicPath, SpacePoint, trivial_path

MAX_HALVINGS = 8
BUDGET_FACTOR = 8.0


class FanError(RuntimeError):
    """A square fan could not be built (continuity break or hit bound)."""


class HomotopyPreconditionError(ValueError):
    pass


def fan_tolerance(step: float) -> float:
    return 5 * step + 10 * TOL_GEO


@dataclass
class Fan:
    curve: GeodesicPath
    s: List[float]
    paths: List[GeodesicPath]
    status: str  # completed | hit_ultconj | break
    step: float
    ult_bound: float
    stop_s: Optional[float] = None
    limsup: float = 0.0

    @property
    def lengths(self) -> List[float]:
        return [g.length for g in self.paths]

    def to_dict(self) -> dict:
        return {"status": self.status, "samples": len(self.s), "curve_length": self.curve.length,
                "stop_s": self.stop_s, "limsup": self.limsup, "ult_bound": self.ult_bound,
                "step": self.step, "lengths": self.lengths}


def _budget(delta: float, factor: float) -> float:
    return factor * delta + 10 * TOL_GEO


def _pick(space, base, q, prev, budget, guide=None):
    """Candidate geodesic base -> q closest to prev (and to guide if given)."""
    L_max = prev.length + budget + 10 * TOL_GEO
    if guide is not None:
        L_max = max(L_max, guide.length + budget + 10 * TOL_GEO)
    cands = enumerate_geodesics(space, base, q, L_max)
    if not cands and base == q:
        cands = [trivial_path(space, base)]
    best, best_d = None, math.inf
    for g in cands:
        d = d_gamma(prev, g)
        if guide is not None:
            d = max(d, d_gamma(guide, g))
        if d < best_d:
            best, best_d = g, d
    return best, best_d


def _advance(space, base, curve_at, s0, s1, prev, factor, halvings=MAX_HALVINGS):
    """Geodesic to curve_at(s1) continuing prev (which ends at curve_at(s0)).

    Returns (path, None) or (None, s_fail) after too many halvings.
    """
    q = curve_at(s1)
    g, d = _pick(space, base, q, prev, _budget(s1 - s0, factor))
    if g is not None and d <= _budget(s1 - s0, factor):
        return g, None
    if halvings == 0:
        return None, s1
    mid = 0.5 * (s0 + s1)
    gm, fail = _advance(space, base, curve_at, s0, mid, prev, factor, halvings - 1)
    if gm is None:
        return None, fail
    return _advance(space, base, curve_at, mid, s1, gm, factor, halvings - 1)


def build_fan(space: ChartComplex, C, ult_bound: float, continuity_budget: float = BUDGET_FACTOR,
              step: Optional[float] = None, n_samples: int = 64) -> Fan:
    """Unfold the fan of C (a path or a list of polyline vertices).

    continuity_budget is the allowed d_Gamma per unit of curve parameter.
    The fan stops with hit_ultconj once a length reaches ult_bound - step.
    """
    curve = C if isinstance(C, GeodesicPath) else polyline_path(space, list(C))
    S = curve.length
    base = curve.start
    if step is None:
        step = S / n_samples if S > 0 else 1.0
    n = max(1, int(math.ceil(S / step - 1e-9))) if S > 0 else 0
    ss = [min(S, i * step) for i in range(n + 1)] if S > 0 else [0.0]
    paths = [trivial_path(space, base)]
    hit_tol = step + 10 * TOL_GEO
    limsup = 0.0
    for s0, s1 in zip(ss[:-1], ss[1:]):
        g, fail = _advance(space, base, curve.at_length, s0, s1, paths[-1], continuity_budget)
        if g is None:
            return Fan(curve, ss[:len(paths)], paths, "break", step, ult_bound, fail, limsup)
        if g.length >= ult_bound - hit_tol:
            return Fan(curve, ss[:len(paths)], paths, "hit_ultconj", step, ult_bound, s1,
                       max(limsup, min(g.length, ult_bound)))
        paths.append(g)
        limsup = max(limsup, g.length)
    return Fan(curve, ss, paths, "completed", step, ult_bound, None, limsup)


@dataclass
class FanCheck:
    ok: bool
    worst: float
    tol: float
    violation: Optional[dict] = None


def fan_length_check(fan: Fan, tol: Optional[float] = None) -> FanCheck:
    """L(sigma_s) <= L(C[0, s]) + tol_fan on every recorded sample."""
    tol = fan_tolerance(fan.step) if tol is None else tol
    worst = -math.inf
    for s, g in zip(fan.s, fan.paths):
        excess = g.length - s
        worst = max(worst, excess)
        if excess > tol:
            return FanCheck(False, worst, tol, {"s": s, "length": g.length, "arclength": s})
    return FanCheck(True, worst, tol)


@dataclass
class Band:
    r: float
    s: List[float]
    points: List[SpacePoint]
    gaps: List[float]

    @property
    def max_gap(self) -> float:
        return max(self.gaps) if self.gaps else 0.0


def band(space: ChartComplex, fan: Fan, r: float) -> Band:
    """H_r = {sigma_s(r / L(sigma_s))} over samples with L(sigma_s) >= r."""
    ss, pts = [], []
    for s, g in zip(fan.s, fan.paths):
        if g.length >= r and g.length > 0:
            ss.append(s)
            pts.append(g.at_length(r))
    gaps = [space.distance(a, b) for a, b in zip(pts[:-1], pts[1:])]
    return Band(r, ss, pts, gaps)


def random_polyline(space: ChartComplex, rng: np.random.Generator, n_vertices: int = 5,
                    step: Optional[float] = None) -> List[SpacePoint]:
    step = 0.5 * space.delta_local if step is None else step
    pts = [space.random_point(rng)]
    while len(pts) < n_vertices:
        q = space.random_step(pts[-1], step, rng)
        if space.distance(q, pts[-1]) > 1e-6:
            pts.append(q)
    return pts


# homotopies

@dataclass
class HomotopyGrid:
    """points[t][s]; every row is a closed curve with points[t][-1] == points[t][0]."""

    space: ChartComplex
    points: List[List[SpacePoint]]

    @property
    def T(self) -> int:
        return len(self.points) - 1

    @property
    def S(self) -> int:
        return len(self.points[0]) - 1

    def row(self, t: int) -> List[SpacePoint]:
        return self.points[t]

    def row_length(self, t: int) -> float:
        r = self.points[t]
        return float(sum(self.space.distance(a, b) for a, b in zip(r[:-1], r[1:])))

    def row_lengths(self) -> List[float]:
        return [self.row_length(t) for t in range(self.T + 1)]

    def max_step(self) -> float:
        sp, m = self.space, 0.0
        for t in range(self.T + 1):
            for s in range(self.S + 1):
                if s < self.S:
                    m = max(m, sp.distance(self.points[t][s], self.points[t][s + 1]))
                if t < self.T:
                    m = max(m, sp.distance(self.points[t][s], self.points[t + 1][s]))
        return m

    def issues(self, max_step: Optional[float] = None, tol: float = 1e-9) -> List[str]:
        sp = self.space
        out = []
        if self.S < 2 or self.T < 1:
            out.append("grid needs at least 3 columns and 2 rows")
        for t in range(self.T + 1):
            if sp.distance(self.points[t][0], self.points[t][-1]) > tol:
                out.append(f"row {t} is not closed")
        lim = sp.delta_local if max_step is None else max_step
        m = self.max_step()
        if m > lim:
            out.append(f"grid step {m:.4g} exceeds {lim:.4g}; H is discontinuous or too coarse")
        return out


def radial_contraction(space: ChartComplex, center: SpacePoint, curve: Sequence[SpacePoint],
                       T: int) -> HomotopyGrid:
    """H(s, t) at fraction t along a minimizing geodesic center -> curve(s)."""
    pts = list(curve)
    if space.distance(pts[0], pts[-1]) > 1e-12:
        pts.append(pts[0])
    geos = [space.minimizing_geodesic(center, q) for q in pts]
    rows = [[g.point_at(t / T) for g in geos] for t in range(T + 1)]
    return HomotopyGrid(space, rows)


def rotate_to_pole(space: ChartComplex, S: int, T: int) -> HomotopyGrid:
    """Unit sphere: circles of colatitude t pi/2 shrinking the equator to the north pole."""
    from .paths import make_point
    chart = space.charts[0].id
    rows = []
    for t in range(T + 1):
        th = 0.5 * math.pi * t / T
        row = [make_point(chart, [math.sin(th) * math.cos(2 * math.pi * s / S),
                                  math.sin(th) * math.sin(2 * math.pi * s / S), math.cos(th)])
               for s in range(S + 1)]
        row[-1] = row[0]
        rows.append([space.canonical(p) for p in row])
    return HomotopyGrid(space, rows)


def constant_homotopy(space: ChartComplex, curve: Sequence[SpacePoint], T: int) -> HomotopyGrid:
    pts = list(curve)
    if space.distance(pts[0], pts[-1]) > 1e-12:
        pts.append(pts[0])
    return HomotopyGrid(space, [list(pts) for _ in range(T + 1)])


@dataclass
class SquareFan:
    grid: HomotopyGrid
    paths: List[List[GeodesicPath]]

    def at(self, s: int, t: int) -> GeodesicPath:
        return self.paths[t][s]


def build_square_fan(space: ChartComplex, H: HomotopyGrid, ult_bound: float,
                     continuity_budget: float = BUDGET_FACTOR) -> SquareFan:
    """sigma_{s,t} from H(0,0) to H(s,t), continuous along rows and across them.

    Row t is seeded from the column curve t -> H(0,t) and then unfolded
    along s; each choice must also stay within budget of the row below.
    """
    lengths = H.row_lengths()
    for t, L in enumerate(lengths):
        if L >= ult_bound:
            raise FanError(f"row {t} has length {L:.6g} >= ult_bound {ult_bound:.6g}")
    base = H.points[0][0]
    col = [H.points[t][0] for t in range(H.T + 1)]
    col_fan = build_fan(space, col, ult_bound, continuity_budget,
                        step=None, n_samples=max(1, 4 * H.T)) if any(
        space.distance(base, p) > 0 for p in col) else None
    rows: List[List[GeodesicPath]] = []
    for t in range(H.T + 1):
        if col_fan is None:
            first = trivial_path(space, base)
        else:
            first = _seed(space, col_fan, col, t)
        row = [first]
        pts = H.points[t]
        for s in range(1, H.S + 1):
            step = space.distance(pts[s - 1], pts[s])
            below = rows[t - 1][s] if t > 0 else None
            cross = space.distance(H.points[t - 1][s], pts[s]) if t > 0 else 0.0
            budget = _budget(max(step, cross), continuity_budget)
            g, d = _pick(space, base, pts[s], row[-1], budget, guide=below)
            if g is None or d > budget:
                raise FanError(f"continuity break at s={s}, t={t} (d_Gamma {d:.4g} > {budget:.4g})")
            if g.length >= ult_bound:
                raise FanError(f"fan at s={s}, t={t} reaches ult_bound")
            row.append(g)
        rows.append(row)
    return SquareFan(H, rows)


def _seed(space, col_fan: Fan, col, t):
    if col_fan.status == "break":
        raise FanError(f"column fan broke at s={col_fan.stop_s}")
    # arclength of the column polyline at vertex t
    acc = sum(space.distance(a, b) for a, b in zip(col[:t], col[1:t + 1]))
    i = int(np.argmin(np.abs(np.array(col_fan.s) - acc)))
    if abs(col_fan.s[i] - acc) > 1e-9 * max(1.0, acc):
        # re-pick exactly at the vertex
        g, _ = _pick(space, col[0], col[t], col_fan.paths[i], _budget(col_fan.step, BUDGET_FACTOR))
        return g
    return col_fan.paths[i]


@dataclass
class LongHomotopyReport:
    status: str
    ult_bound: float
    curve_length: float
    max_row_length: float = 0.0
    long_row: Optional[int] = None
    closed: List[bool] = field(default_factory=list)
    break_row: Optional[int] = None
    lowered_bound: Optional[float] = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"status": self.status, "ult_bound": self.ult_bound, "curve_length": self.curve_length,
                "max_row_length": self.max_row_length, "long_row": self.long_row,
                "closed": self.closed, "break_row": self.break_row,
                "lowered_bound": self.lowered_bound, "detail": self.detail}


def _half_fans(space, row, budget_factor, ult_bound):
    """Forward fan over s in [0, 1/2] and backward fan from s = 1 down to 1/2."""
    curve = polyline_path(space, row)
    L = curve.length
    if L == 0:
        p = trivial_path(space, row[0])
        return p, p, 0.0
    n = max(8, len(row) - 1)
    half_f = curve.sub_length(0.0, 0.5 * L)
    half_b = curve.sub_length(0.5 * L, L).reversed()
    f1 = build_fan(space, half_f, ult_bound, budget_factor, n_samples=n)
    f2 = build_fan(space, half_b, ult_bound, budget_factor, n_samples=n)
    for f in (f1, f2):
        if f.status != "completed":
            raise FanError(f"half fan {f.status} at s={f.stop_s}")
    return f1.paths[-1], f2.paths[-1], f1.step


def long_homotopy_audit(space: ChartComplex, c: GeodesicPath, H: HomotopyGrid, ult_bound: float,
                        continuity_budget: float = BUDGET_FACTOR) -> LongHomotopyReport:
    """Audit one null homotopy H of the closed geodesic c against ult_bound.

    Statuses: trivial_curve, invalid_homotopy, precondition_length (c is
    not shorter than 2 ult_bound), confirmed (some row reaches
    2 ult_bound), fan_failure, ult_bound_violation (every row is shorter,
    yet the closed pair of fans opens, so ult_bound was too large), and
    unexpected_closed (fans never open; H or c is not what was claimed).
    """
    Lc = c.length
    rep = LongHomotopyReport("", ult_bound, Lc)
    if Lc <= TOL_GEO:
        rep.status, rep.detail = "trivial_curve", "c is a point curve; nothing to audit"
        return rep
    issues = H.issues()
    last = H.points[-1]
    top = H.points[0]
    if any(space.distance(top[0], p) > 1e-9 for p in top):
        issues.append("H(., 0) is not a point")
    cs = [c.point_at(s / H.S) for s in range(H.S + 1)]
    if max(space.distance(a, b) for a, b in zip(cs, last)) > 1e-6 * max(1.0, Lc):
        issues.append("H(., 1) does not trace c")
    if issues:
        rep.status, rep.detail = "invalid_homotopy", "; ".join(issues)
        return rep
    if Lc >= 2 * ult_bound - 1e-12:
        rep.status = "precondition_length"
        rep.detail = f"L(c)={Lc:.6g} is not below 2 ult_bound={2 * ult_bound:.6g}"
        return rep
    lengths = H.row_lengths()
    rep.max_row_length = max(lengths)
    long_rows = [t for t, L in enumerate(lengths) if L >= 2 * ult_bound]
    if long_rows:
        rep.status, rep.long_row = "confirmed", long_rows[0]
        rep.detail = f"row {long_rows[0]} has length {lengths[long_rows[0]]:.6g} >= 2 ult_bound"
        return rep
    for t in range(H.T + 1):
        try:
            a, b, step = _half_fans(space, H.points[t], continuity_budget, ult_bound)
        except FanError as exc:
            rep.status, rep.break_row, rep.detail = "fan_failure", t, str(exc)
            return rep
        closed = a.is_trivial and b.is_trivial or d_gamma(a, b) <= _budget(step, continuity_budget)
        rep.closed.append(bool(closed))
        if not closed and rep.break_row is None:
            rep.break_row = t
    if rep.break_row is not None:
        rep.status = "ult_bound_violation"
        rep.lowered_bound = rep.max_row_length / 2
        rep.detail = (f"fans open at row {rep.break_row} while every row is shorter than "
                      f"2 ult_bound; ult_bound can be at most {rep.lowered_bound:.6g}")
    else:
        rep.status = "unexpected_closed"
        rep.detail = "the pair of fans stays closed up to c; c is not a closed geodesic here"
    return rep
