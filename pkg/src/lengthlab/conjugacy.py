"""Shrinking-neighborhood conjugacy detectors and continuous families.

A detector works through K levels.  Level k perturbs the endpoints of a
geodesic within r_k and asks whether nearby geodesics (d_Gamma <= tau_k)
behave degenerately.  A positive verdict needs a witness at every level.
Levels are scanned finest first so a negative answer exits early.

"Inconclusive" is a separate outcome: it is returned when an enumeration
hit its budget on a level that produced no witness.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._base import TOL_GEO, ChartComplex
from .geodesic_engine import certify_local, d_gamma
from .model_space import diameter_bound
from .paths import GeodesicPath, SpacePoint

DISTINCT = 1e-6        # two geodesics closer than this in d_Gamma are the same
AB_RATIO = 45.0 / 48.0
AB_SLACK = 0.02


# schedules

@dataclass(frozen=True)
class ShrinkSchedule:
    radii: Tuple[float, ...]
    n: int
    taus: Tuple[float, ...]
    seed: int = 0

    def __post_init__(self):
        if len(self.radii) == 0 or len(self.radii) != len(self.taus):
            raise ValueError("radii and taus need the same positive length")
        if any(r <= 0 for r in self.radii) or any(t <= 0 for t in self.taus):
            raise ValueError("radii and taus must be positive")
        if any(b >= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must strictly decrease")
        if any(b > a for a, b in zip(self.taus, self.taus[1:])):
            raise ValueError("taus must not increase")
        if self.n < 1:
            raise ValueError("n must be at least 1")

    @property
    def K(self) -> int:
        return len(self.radii)

    @property
    def mu(self) -> float:
        """Unreachability margin."""
        return 10.0 * self.taus[-1]

    def to_dict(self) -> dict:
        return {"radii": list(self.radii), "n": self.n, "taus": list(self.taus), "seed": self.seed}

    @property
    def hash(self) -> str:
        blob = json.dumps({k: ([float.hex(float(x)) for x in v] if isinstance(v, list) else v)
                           for k, v in self.to_dict().items()}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


TAU_FACTOR = 8.0


def default_schedule(space: ChartComplex, K: int = 4, n: int = 32,
                     tau_factor: float = TAU_FACTOR, seed: int = 0) -> ShrinkSchedule:
    """r_k = r_1 4^(1-k) with r_1 = delta_local, and tau_k = tau_factor r_k."""
    r1 = space.delta_local
    radii = tuple(r1 * 4.0 ** (-k) for k in range(K))
    taus = tuple(tau_factor * r for r in radii)
    return ShrinkSchedule(radii, n, taus, seed)


# verdicts

def _pt(p: SpacePoint) -> dict:
    return {"chart": p.chart, "coords": [float(x) for x in p.coords]}


def _path_summary(g: GeodesicPath) -> dict:
    return {"length": g.length, "start": _pt(g.start), "end": _pt(g.end),
            "route": [str(r) for r in g.route]}


@dataclass
class LevelWitness:
    level: int
    p: SpacePoint
    q: SpacePoint
    paths: List[GeodesicPath] = field(default_factory=list)
    gap: float = 0.0   # for unreachable: min d_Gamma of every candidate to gamma

    def to_dict(self) -> dict:
        return {"level": self.level, "p": _pt(self.p), "q": _pt(self.q), "gap": self.gap,
                "paths": [_path_summary(g) for g in self.paths]}


@dataclass
class ConjugacyVerdict:
    kind: str                      # one_sided | symmetric | unreachable | ultimate | none
    detector: str
    witnesses: List[LevelWitness] = field(default_factory=list)
    levels_completed: int = 0
    sub_kinds: Tuple[str, ...] = ()
    caveats: List[str] = field(default_factory=list)
    inconclusive: bool = False
    schedule_hash: str = ""

    @property
    def positive(self) -> bool:
        return self.kind != "none" and not self.inconclusive

    def to_record(self, space_name: str = "", gamma: Optional[GeodesicPath] = None) -> dict:
        rec = {"space": space_name, "detector": self.detector, "verdict": self.kind,
               "inconclusive": self.inconclusive, "levels_completed": self.levels_completed,
               "sub_kinds": list(self.sub_kinds), "caveats": list(self.caveats),
               "schedule": self.schedule_hash,
               "witnesses": [w.to_dict() for w in self.witnesses]}
        if gamma is not None:
            rec["geodesic"] = _path_summary(gamma)
        return rec


# helpers

def close_candidates(gamma: GeodesicPath, cands: Sequence[GeodesicPath], tau: float,
                     m: int = 17) -> List[Tuple[float, GeodesicPath]]:
    """Candidates within tau of gamma in d_Gamma, cheap lower bounds first."""
    out = []
    if not cands:
        return out
    space = gamma.space
    mid = gamma.point_at(0.5)
    pre = [g for g in cands if abs(g.length - gamma.length) <= tau]
    if not pre:
        return out
    dm = space.distances([g.point_at(0.5) for g in pre], [mid] * len(pre))
    for g, x in zip(pre, dm):
        if x + abs(g.length - gamma.length) > tau:
            continue
        dg = d_gamma(g, gamma, m)
        if dg <= tau:
            out.append((dg, g))
    out.sort(key=lambda t: (t[0], t[1].sort_key()))
    return out


def _distinct_pair(close: List[Tuple[float, GeodesicPath]]) -> Optional[List[GeodesicPath]]:
    if len(close) < 2:
        return None
    first = close[0][1]
    for _, g in close[1:]:
        if d_gamma(first, g) > DISTINCT:
            return [first, g]
    return None


def _rng(schedule: ShrinkSchedule, tag: int, level: int) -> np.random.Generator:
    return np.random.default_rng([schedule.seed, tag, level])


def _perturb(space, x, r, rng):
    return space.random_step(x, r, rng)


def _is_trivial(gamma):
    return gamma.is_trivial or gamma.length <= TOL_GEO


# detectors

def _pair_detector(space, gamma, schedule, both: bool, name: str, tag: int,
                   levels: Optional[Sequence[int]] = None, n: Optional[int] = None):
    if _is_trivial(gamma):
        return ConjugacyVerdict("none", name, schedule_hash=schedule.hash)
    p0, q0 = gamma.start, gamma.end
    K = schedule.K
    order = list(levels) if levels is not None else list(range(K, 0, -1))
    n = schedule.n if n is None else n
    witnesses = {}
    truncated_levels = []
    for k in order:
        r, tau = schedule.radii[k - 1], schedule.taus[k - 1]
        rng = _rng(schedule, tag, k)
        found = None
        trunc = False
        for i in range(n + 1):
            if i == 0:
                p, q = p0, q0
            else:
                p = _perturb(space, p0, r, rng) if both else p0
                q = _perturb(space, q0, r, rng)
            cands = space.geodesics(p, q, gamma.length + tau, tau / 4)
            trunc = trunc or cands.truncated
            pair = _distinct_pair(close_candidates(gamma, cands, tau))
            if pair is not None:
                found = LevelWitness(k, p, q, pair)
                break
        if found is None:
            if trunc:
                truncated_levels.append(k)
                continue
            return ConjugacyVerdict("none", name, levels_completed=0, schedule_hash=schedule.hash)
        witnesses[k] = found
    if truncated_levels:
        return ConjugacyVerdict("none", name, [witnesses[k] for k in sorted(witnesses)],
                                len(witnesses), caveats=[f"enumeration budget hit at levels {truncated_levels}"],
                                inconclusive=True, schedule_hash=schedule.hash)
    kind = "symmetric" if both else "one_sided"
    return ConjugacyVerdict(kind, name, [witnesses[k] for k in sorted(witnesses)], len(order),
                            schedule_hash=schedule.hash)


def detect_one_sided(space: ChartComplex, gamma: GeodesicPath, schedule: ShrinkSchedule) -> ConjugacyVerdict:
    """Two distinct geodesics from gamma(0) to a perturbed endpoint, both tau-close to gamma."""
    return _pair_detector(space, gamma, schedule, False, "one_sided", 1)


def detect_symmetric(space: ChartComplex, gamma: GeodesicPath, schedule: ShrinkSchedule) -> ConjugacyVerdict:
    """As detect_one_sided with both endpoints perturbed."""
    return _pair_detector(space, gamma, schedule, True, "symmetric", 2)


def detect_unreachable(space: ChartComplex, gamma: GeodesicPath, schedule: ShrinkSchedule,
                       levels: Optional[Sequence[int]] = None, n: Optional[int] = None) -> ConjugacyVerdict:
    """Perturbed endpoint pairs whose every geodesic stays at least mu from gamma."""
    name = "unreachable"
    if _is_trivial(gamma):
        return ConjugacyVerdict("none", name, schedule_hash=schedule.hash)
    mu = schedule.mu
    p0, q0 = gamma.start, gamma.end
    order = list(levels) if levels is not None else list(range(schedule.K, 0, -1))
    n = schedule.n if n is None else n
    witnesses = {}
    for k in order:
        r = schedule.radii[k - 1]
        rng = _rng(schedule, 3, k)
        found = None
        for _ in range(n):
            p = _perturb(space, p0, r, rng)
            q = _perturb(space, q0, r, rng)
            cands = space.geodesics(p, q, gamma.length + 1.0, mu / 4)
            if cands.truncated:
                continue
            if close_candidates(gamma, cands, mu):
                continue
            gap = min((d_gamma(g, gamma) for g in cands), default=math.inf)
            found = LevelWitness(k, p, q, [], gap)
            break
        if found is None:
            return ConjugacyVerdict("none", name, schedule_hash=schedule.hash)
        witnesses[k] = found
    caveat = "geodesic enumeration is complete only relative to the kernel's seeding family"
    return ConjugacyVerdict("unreachable", name, [witnesses[k] for k in sorted(witnesses)], len(order),
                            caveats=[caveat], schedule_hash=schedule.hash)


def detect_ultimate(space: ChartComplex, gamma: GeodesicPath, schedule: ShrinkSchedule) -> ConjugacyVerdict:
    """Symmetric or unreachable; both sub-detectors always run."""
    sym = detect_symmetric(space, gamma, schedule)
    unr = detect_unreachable(space, gamma, schedule)
    subs = tuple(v.kind for v in (sym, unr) if v.positive)
    caveats = sym.caveats + unr.caveats
    if subs:
        wit = (sym.witnesses if sym.positive else []) + (unr.witnesses if unr.positive else [])
        return ConjugacyVerdict("ultimate", "ultimate", wit, schedule.K, subs, caveats,
                                schedule_hash=schedule.hash)
    inconc = sym.inconclusive and unr.inconclusive
    return ConjugacyVerdict("none", "ultimate", [], 0, (), caveats, inconc, schedule.hash)


def _quick_ultimate(space, gamma, schedule, n=6, level=None) -> bool:
    """Cheap screen at a single level (the finest by default)."""
    k = schedule.K if level is None else level
    if _pair_detector(space, gamma, schedule, True, "symmetric", 2, levels=[k], n=n).positive:
        return True
    return detect_unreachable(space, gamma, schedule, levels=[k], n=n).positive


# continuous families

def select_near(space: ChartComplex, u: SpacePoint, v: SpacePoint, reference: GeodesicPath,
                budget: float) -> Tuple[Optional[GeodesicPath], float]:
    """The enumerated geodesic u -> v closest to reference in d_Gamma."""
    L_max = reference.length + budget
    cands = space.geodesics(u, v, L_max, max(DISTINCT, budget / 64))
    if not cands:
        if space.canonical(u) == space.canonical(v) and reference.length <= budget:
            return GeodesicPath(space, [], base=u), reference.length
        return None, math.inf
    best, bd = None, math.inf
    for dg, g in close_candidates(reference, cands, budget):
        if dg < bd:
            best, bd = g, dg
    return best, bd


class NearestFamily:
    """F(u, v) = the enumerated geodesic u -> v closest to gamma."""

    def __init__(self, space: ChartComplex, gamma: GeodesicPath, budget: float):
        self.space, self.gamma, self.budget = space, gamma, budget

    def __call__(self, u: SpacePoint, v: SpacePoint) -> Optional[GeodesicPath]:
        return select_near(self.space, u, v, self.gamma, self.budget)[0]


@dataclass
class FamilyGrid:
    gamma: GeodesicPath
    U: List[SpacePoint]
    V: List[SpacePoint]
    table: Dict[Tuple[int, int], GeodesicPath]
    omega: Dict[float, float]
    budget: float
    broken: bool
    break_cells: List[Tuple[int, int]] = field(default_factory=list)

    def __call__(self, u: SpacePoint, v: SpacePoint) -> Optional[GeodesicPath]:
        space = self.gamma.space
        for (i, j), g in self.table.items():
            if self.U[i] == space.canonical(u) and self.V[j] == space.canonical(v):
                return g
        return select_near(space, u, v, self.gamma, self.budget)[0]


def _grid(space, center, radius, grid_n, n_dirs=8):
    pts = [space.canonical(center)]
    if radius <= 0 or grid_n <= 0:
        return pts
    rays = space.rays(center, radius, n_dirs=n_dirs, max_rays=4 * n_dirs)
    for i in range(1, grid_n + 1):
        s = radius * i / grid_n
        for r in rays:
            if r.length >= s - 1e-12:
                x = r.at_length(s)
                if all(space.distance(x, y) > 1e-9 for y in pts):
                    pts.append(x)
    return pts


def build_family(space: ChartComplex, gamma: GeodesicPath, radius_U: float, radius_V: float,
                 grid_n: int = 2, budget: Optional[float] = None, n_dirs: int = 8) -> FamilyGrid:
    """Assign a geodesic to every grid pair in spiral order from (gamma(0), gamma(1))."""
    if budget is None:
        budget = 10.0 * max(radius_U, radius_V, TOL_GEO)
    U = _grid(space, gamma.start, radius_U, grid_n, n_dirs)
    V = _grid(space, gamma.end, radius_V, grid_n, n_dirs)
    du = [space.distance(U[0], u) for u in U]
    dv = [space.distance(V[0], v) for v in V]
    cells = sorted(((i, j) for i in range(len(U)) for j in range(len(V))),
                   key=lambda c: (du[c[0]] + dv[c[1]], c))
    table: Dict[Tuple[int, int], GeodesicPath] = {}
    breaks = []
    for (i, j) in cells:
        if (i, j) == (0, 0):
            table[(0, 0)] = gamma
            continue
        cands = space.geodesics(U[i], V[j], gamma.length + budget, max(DISTINCT, budget / 64))
        close = close_candidates(gamma, cands, budget)
        if not close:
            breaks.append((i, j))
            continue
        # nearest already-assigned neighbour keeps the assignment consistent
        nb = min(table, key=lambda c: (space.distance(U[i], U[c[0]]) + space.distance(V[j], V[c[1]]), c))
        ref = table[nb]
        table[(i, j)] = min(close, key=lambda t: (t[0] + d_gamma(t[1], ref), t[1].sort_key()))[1]
    omega = _modulus(space, U, V, table)
    return FamilyGrid(gamma, U, V, table, omega, budget, bool(breaks), breaks)


def _modulus(space, U, V, table):
    keys = sorted(table)
    pairs = []
    for a in range(len(keys)):
        for b in range(a + 1, len(keys)):
            (i, j), (k, l) = keys[a], keys[b]
            dist = space.distance(U[i], U[k]) + space.distance(V[j], V[l])
            pairs.append((dist, d_gamma(table[keys[a]], table[keys[b]])))
    if not pairs:
        return {}
    dists = sorted({round(d, 12) for d, _ in pairs})
    omega = {}
    run = 0.0
    for d in dists:
        run = max([run] + [g for dd, g in pairs if round(dd, 12) <= d])
        omega[d] = run
    return omega


def family_uniqueness_check(space: ChartComplex, gamma: GeodesicPath, F1: FamilyGrid,
                            F2: FamilyGrid, tau: Optional[float] = None) -> bool:
    """True iff the two families agree within tau on every shared grid pair."""
    tau = tau if tau is not None else min(F1.budget, F2.budget) / 10.0
    shared = 0
    for (i, j), g in F1.table.items():
        u, v = F1.U[i], F1.V[j]
        for (k, l), h in F2.table.items():
            if space.distance(u, F2.U[k]) <= 1e-12 and space.distance(v, F2.V[l]) <= 1e-12:
                shared += 1
                if d_gamma(g, h) > tau:
                    return False
    return shared > 0


# Alexander-Bishop extension

@dataclass(frozen=True)
class ABConfig:
    T: float
    T0: float
    eps1: float
    delta1: float
    delta2: float
    delta3: float
    delta4: float
    h: float
    ratio_bound: float = AB_RATIO

    @staticmethod
    def constant_checks(T0: float) -> Tuple[float, float]:
        """The two T0 constraints, returned as (first, second) values."""
        c1 = math.sin(T0 / 6) / math.sin(2 * T0 / 6)
        c2 = math.cos(T0 / 6) + math.sin(T0 / 6) / math.sin(T0)
        return c1, c2

    def validate(self) -> None:
        c1, c2 = self.constant_checks(self.T0)
        if not c1 < 0.75:
            raise ValueError(f"T0={self.T0}: sin(T0/6)/sin(2T0/6) = {c1} is not below 3/4")
        if not c2 < 15.0 / 12.0:
            raise ValueError(f"T0={self.T0}: cos(T0/6)+sin(T0/6)/sin(T0) = {c2} is not below 15/12")
        if not (0 < self.delta4 <= self.delta3 <= self.delta2 <= self.delta1 <= self.eps1):
            raise ValueError("need 0 < delta4 <= delta3 <= delta2 <= delta1 <= eps1")
        if not (self.T0 < self.T):
            raise ValueError("need T0 < T")

    @classmethod
    def from_lengths(cls, T: float, T0: float) -> "ABConfig":
        eps1 = T0 / 12
        d1, d2, d3, d4 = eps1 / 2, eps1 / 4, eps1 / 8, eps1 / 16
        cfg = cls(T, T0, eps1, d1, d2, d3, d4, 2 * d1)
        cfg.validate()
        return cfg


@dataclass
class ABResult:
    path: Optional[GeodesicPath]
    converged: bool
    aborted: bool
    iterations: int
    ratios: List[float]
    displacements: List[float]
    certified: bool
    violations: int
    reason: str = ""


def extend_family_AB(space: ChartComplex, family: Callable[[SpacePoint, SpacePoint], Optional[GeodesicPath]],
                     gamma: GeodesicPath, config: ABConfig, u: SpacePoint, w: SpacePoint,
                     tol: float = TOL_GEO, max_iter: int = 200) -> ABResult:
    """Iterate sigma_k = [w, y_k], x_{k+1} = midpoint, gamma_k = family(u, x_{k+1}).

    gamma is the reference geodesic of length T + T0/6; family covers its
    initial part of length T.  y_{k+1} sits T0/6 before the end of gamma_k.
    """
    config.validate()
    back = config.T0 / 6
    if space.distance(u, gamma.start) > config.delta3 + tol:
        raise ValueError("u is not within delta3 of gamma(0)")
    if space.distance(w, gamma.end) > config.delta4 + tol:
        raise ValueError("w is not within delta4 of the endpoint")
    y = gamma.at_length(config.T - back)
    ys = [y]
    disp, ratios = [], []
    strikes, violations = 0, 0
    g_k = sigma = None
    limit = config.ratio_bound + AB_SLACK
    for it in range(1, max_iter + 1):
        sigma = space.minimizing_geodesic(w, y)
        x = sigma.point_at(0.5)
        g_k = family(u, x)
        if g_k is None:
            return ABResult(None, False, True, it, ratios, disp, False, violations,
                            "family break: no geodesic from u to x_k in the family")
        y_new = g_k.at_length(g_k.length - back)
        disp.append(space.distance(y_new, y))
        if len(disp) >= 2 and disp[-2] > 0:
            ratio = disp[-1] / disp[-2]
            ratios.append(ratio)
            if ratio > limit and disp[-2] > 10 * tol:
                violations += 1
                strikes += 1
                if strikes >= 3:
                    return ABResult(None, False, True, it, ratios, disp, False, violations,
                                    "contraction ratio above bound three times in a row")
            else:
                strikes = 0
        y = y_new
        ys.append(y)
        if disp[-1] < tol:
            sigma = space.minimizing_geodesic(w, y)
            x = sigma.point_at(0.5)
            g_k = family(u, x)
            if g_k is None:
                break
            tail = sigma.sub(0.0, 0.5).reversed()
            path = GeodesicPath(space, g_k.pieces + tail.pieces, base=u,
                                route=g_k.route + tail.route)
            return ABResult(path, True, False, it, ratios, disp, certify_local(space, path), violations)
    return ABResult(None, False, False, max_iter, ratios, disp, False, violations,
                    "no convergence within max_iter")


# ultimate conjugate radius

@dataclass
class UltConjResult:
    value: float          # math.inf when nothing was found below L_max
    lower: float
    upper: float
    L_max: float
    bounded: bool
    witness: Optional[GeodesicPath] = None
    caveats: List[str] = field(default_factory=list)

    def __str__(self):
        if not self.bounded:
            return f">= {self.L_max:g}"
        return f"{self.value:.6g}"


def _ultimate_at(space, ray, r, schedule, cache, mode="full"):
    key = (id(ray), round(r, 12), mode)
    if key not in cache:
        g = ray.sub_length(0.0, r)
        if mode == "coarse":
            cache[key] = _quick_ultimate(space, g, schedule, level=max(1, schedule.K - 1))
        elif mode == "quick":
            cache[key] = _quick_ultimate(space, g, schedule)
        else:
            cache[key] = detect_ultimate(space, g, schedule).positive
    return cache[key]


def _first_hit(space, ray, schedule, cache, a, b, step):
    """First r in (a, b] on the step grid passing the quick and full detectors."""
    r = a + step
    prev = a
    while r <= b + 1e-12:
        if _ultimate_at(space, ray, r, schedule, cache, "quick") and \
                _ultimate_at(space, ray, r, schedule, cache):
            return prev, r
        prev, r = r, r + step
    return None


def ult_conj_radius(space: ChartComplex, p: Optional[SpacePoint], L_max: float,
                    schedule: ShrinkSchedule, n_dirs: int = 4, step: Optional[float] = None,
                    bisect_iters: int = 6, points: Optional[Sequence[SpacePoint]] = None,
                    start: Optional[float] = None) -> UltConjResult:
    """Smallest sampled length with an ultimate verdict, or >= L_max.

    With p None the infimum over `points` (default: named and special
    points) is returned.  Each ray is screened at level K-1 on a coarse
    grid; around a coarse hit a grid of step 2 r_K is confirmed with the
    full detector, then the bracket is bisected.  Coarser levels are more
    permissive, so the coarse screen does not skip a fine-level hit.
    """
    if L_max <= 0:
        raise ValueError("L_max must be positive")
    if p is None:
        pts = list(points) if points is not None else (list(space.named_points().values())
                                                       + space.special_points())
        if not pts:
            pts = [space.random_point(np.random.default_rng(schedule.seed))]
        best = None
        for x in pts:
            res = ult_conj_radius(space, x, L_max, schedule, n_dirs, step, bisect_iters, start=start)
            if best is None or res.value < best.value:
                best = res
            L_max = min(L_max, res.value) if res.bounded else L_max
        return best
    fine = step if step is not None else 2.0 * schedule.radii[-1]
    coarse = 4.0 * fine
    rays = [g for g in space.rays(p, L_max, n_dirs=n_dirs, max_rays=4 * n_dirs) if g.length > 0]
    best = UltConjResult(math.inf, L_max, math.inf, L_max, False)
    cache: dict = {}
    for ray in rays:
        top = min(ray.length, best.value if best.bounded else L_max)
        r = start if start is not None else coarse
        bracket = None
        while r <= top + coarse and bracket is None:
            rr = min(r, top)
            if _ultimate_at(space, ray, rr, schedule, cache, "coarse"):
                bracket = _first_hit(space, ray, schedule, cache, max(0.0, rr - 2 * coarse),
                                     min(top, rr + coarse), fine)
            if rr >= top:
                break
            r += coarse
        if bracket is None:
            continue
        lo, hi = bracket
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            if mid <= 0:
                break
            if _ultimate_at(space, ray, mid, schedule, cache):
                hi = mid
            else:
                lo = mid
        if hi < best.value:
            best = UltConjResult(hi, lo, hi, L_max, True, ray.sub_length(0.0, hi))
    if best.bounded:
        best.caveats.append("ultimate verdicts carry the enumeration-completeness caveat")
    return best
