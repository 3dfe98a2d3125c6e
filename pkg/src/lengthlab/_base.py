"""Common interface of every chart complex kernel."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .paths import GeodesicPath, GeodesicSet, Piece, SpacePoint

TOL_GEO = 1e-7
MAX_ITER = 10_000


@dataclass(frozen=True)
class Chart:
    id: str
    kind: str  # spherical-polygon | flat-polygon | segment-edge
    params: Dict[str, float] = field(default_factory=dict)
    diameter: float = math.inf


@dataclass(frozen=True)
class Gluing:
    kind: str  # point | arc
    members: Tuple[Tuple[str, str], ...]


class ChartComplex:
    """A geodesic space built from constant-curvature charts.

    Subclasses supply the exact kernel: canonical points, distances,
    geodesic enumeration, ray tracing and sampling.  Everything generic
    (shortening, d_Gamma, detectors, radii) is written against this
    interface.
    """

    tol_geo = TOL_GEO

    def __init__(self, name: str, charts: Sequence[Chart], gluings: Sequence[Gluing],
                 witness_delta: Optional[float], cba_kappa: Optional[float],
                 params: Optional[dict] = None, horizon: float = 10.0,
                 nominal_scale: Optional[float] = None):
        self.name = name
        self.charts = list(charts)
        self.gluings = list(gluings)
        self.witness_delta = witness_delta
        self.cba_kappa = cba_kappa
        self.params = dict(params or {})
        self.horizon = horizon
        diam = min(c.diameter for c in self.charts)
        self.eta = 1e-2 * diam
        self._nominal = nominal_scale

    # derived scales
    @property
    def delta_local(self) -> float:
        if self.witness_delta is not None:
            return 0.5 * self.witness_delta
        return 0.5 * (self._nominal or 1.0)

    @property
    def tol_rad(self) -> float:
        return 5 * self.eta + 10 * self.tol_geo

    @property
    def uniformly_minimizing(self) -> bool:
        return self.witness_delta is not None

    def warnings(self) -> List[str]:
        if self.witness_delta is None:
            return ["not locally uniformly minimizing: no witness delta"]
        return []

    # kernel interface
    def canonical(self, p: SpacePoint) -> SpacePoint:
        raise NotImplementedError

    def distance(self, p: SpacePoint, q: SpacePoint) -> float:
        raise NotImplementedError

    def distances(self, ps: Sequence[SpacePoint], qs: Sequence[SpacePoint]) -> np.ndarray:
        """Elementwise distances of two equally long point lists."""
        return np.array([self.distance(a, b) for a, b in zip(ps, qs)])

    def geodesics(self, p: SpacePoint, q: SpacePoint, L_max: float,
                  eps_sep: float) -> GeodesicSet:
        raise NotImplementedError

    def rays(self, p: SpacePoint, length: float, n_dirs: int = 16,
             minimizing_only: bool = False, max_rays: int = 512) -> List[GeodesicPath]:
        raise NotImplementedError

    def continuations(self, gamma: GeodesicPath, length: float,
                      n_dirs: int = 16) -> List[Tuple[List[Piece], bool]]:
        """Straight continuations of gamma past its end, with branching.

        Each entry is (pieces, stopped) where stopped means the
        continuation hit a non-extensible end before reaching length.
        """
        raise NotImplementedError

    def random_point(self, rng: np.random.Generator) -> SpacePoint:
        raise NotImplementedError

    def random_step(self, p: SpacePoint, r: float, rng: np.random.Generator) -> SpacePoint:
        """A point within distance r of p, reached by a random geodesic germ."""
        raise NotImplementedError

    def special_points(self) -> List[SpacePoint]:
        return []

    def in_domain(self, p: SpacePoint) -> bool:
        """False when user coordinates fall outside their chart."""
        return True

    def probe_points(self) -> List[SpacePoint]:
        """Points just off cone singularities, where radius infima concentrate."""
        return []

    def named_points(self) -> Dict[str, SpacePoint]:
        return {}

    # generic helpers
    def point(self, name: str) -> SpacePoint:
        pts = self.named_points()
        if name not in pts:
            raise KeyError(f"space {self.name} has no named point {name!r}")
        return pts[name]

    def minimizing_geodesics(self, p: SpacePoint, q: SpacePoint, slack: float = 0.0,
                             eps_sep: Optional[float] = None) -> GeodesicSet:
        d = self.distance(p, q)
        eps = eps_sep if eps_sep is not None else 10 * self.tol_geo
        tol = slack + 10 * self.tol_geo * max(1.0, d)
        found = self.geodesics(p, q, d + tol, eps)
        out = GeodesicSet(g for g in found if g.length <= d + tol)
        out.truncated = found.truncated
        return out

    def minimizing_geodesic(self, p: SpacePoint, q: SpacePoint) -> GeodesicPath:
        p, q = self.canonical(p), self.canonical(q)
        if p == q:
            return GeodesicPath(self, [], base=p)
        gs = self.minimizing_geodesics(p, q)
        if not gs and self.distance(p, q) <= 1e-12:
            # kernels drop sub-tolerance arcs, so treat such pairs as one point
            return GeodesicPath(self, [], base=p)
        if not gs:
            raise RuntimeError(f"no minimizing geodesic found from {p} to {q} in {self.name}")
        return min(gs, key=lambda g: g.sort_key())

    def describe(self) -> dict:
        return {
            "name": self.name,
            "charts": [{"id": c.id, "kind": c.kind, **c.params} for c in self.charts],
            "gluings": [{"kind": g.kind, "members": [list(m) for m in g.members]}
                        for g in self.gluings],
            "eta": self.eta,
            "witness_delta": self.witness_delta,
            "cba_kappa": self.cba_kappa,
            "horizon": self.horizon,
            "params": self.params,
        }
