"""Catalog of example spaces, plus a loader for space-definition files.

Every builder returns an immutable ChartComplex.  Infinite examples are
truncated by explicit parameters (J, depth, window); radius answers carry
the space's horizon so an unbounded value reads as ">= horizon".
"""
from __future__ import annotations

import hashlib
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from ._base import ChartComplex, Chart, Gluing, TOL_GEO
from ._cube import CubeSurface
from ._flat import CylinderLine, FlatTorus
from ._glued import DiskGeom, LuneGeom, PointGluedComplex, SegmentGeom, SphereGeom
from ._pages import TripleHemisphere
from .paths import SpacePoint, make_point

__all__ = [
    "ChartComplex", "Chart", "Gluing", "SpacePoint", "make_point",
    "build_line_pile", "build_pinned_sector", "build_pinned_hemisphere",
    "build_rationally_attached_line", "build_circle_with_chord", "build_circle",
    "build_tetra_bisphere", "build_triple_hemisphere", "build_flat_disk", "build_flat_plane",
    "build_unit_sphere", "build_cube_surface", "build_flat_torus", "build_cylinder_line",
    "CATALOG", "build", "load_space", "parse_point", "SpaceFileError",
]

TETRA = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(3)


class SpaceFileError(ValueError):
    """Malformed space-definition file or unknown builder."""


def build_line_pile(J: int = 3, with_unit_segment: bool = True, horizon: float = 10.0) -> ChartComplex:
    """J segments of lengths 1 + 1/j from p to q, optionally plus [0, 1]."""
    if J < 1:
        raise ValueError("J must be at least 1")
    geoms = [SegmentGeom(f"s{j}", 1.0 + 1.0 / j) for j in range(1, J + 1)]
    if with_unit_segment:
        geoms.append(SegmentGeom("u", 1.0))
    verts = [[(g.cid, [0.0]) for g in geoms], [(g.cid, [g.L]) for g in geoms]]
    named = {"p": make_point(geoms[0].cid, [0.0]), "q": make_point(geoms[0].cid, [geoms[0].L])}
    lengths = sorted(g.L for g in geoms)
    # geodesics shorter than half the shortest cycle are minimizing
    delta = 0.5 * (lengths[0] + lengths[1]) / 2 if len(geoms) > 1 else lengths[0]
    return PointGluedComplex(f"line_pile(J={J},unit={bool(with_unit_segment)})", geoms, verts, named,
                             delta, 0.0, {"J": J, "with_unit_segment": bool(with_unit_segment)}, horizon)


def build_pinned_sector(lune_angle: float = math.pi / 2, segment_length: float = 1.0,
                        horizon: float = 10.0) -> ChartComplex:
    """Unit-sphere lune between poles p1 = N and p2 = S, with a segment at each pole."""
    if not 0 < lune_angle < 2 * math.pi:
        raise ValueError("lune angle must lie in (0, 2 pi)")
    if segment_length <= 0:
        raise ValueError("segment length must be positive")
    lune = LuneGeom("L", lune_angle)
    a = SegmentGeom("a", segment_length)
    b = SegmentGeom("b", segment_length)
    verts = [[("L", [0, 0, 1]), ("a", [0.0])], [("L", [0, 0, -1]), ("b", [0.0])]]
    named = {"p1": make_point("L", [0, 0, 1]), "p2": make_point("L", [0, 0, -1]),
             "q1": make_point("a", [segment_length]), "q2": make_point("b", [segment_length]),
             "m": make_point("L", [math.cos(lune_angle / 2), math.sin(lune_angle / 2), 0.0])}
    name = "pinned_hemisphere" if abs(lune_angle - math.pi) < 1e-12 else f"pinned_sector(angle={lune_angle:.6g})"
    return PointGluedComplex(name, [lune, a, b], verts, named, min(math.pi / 2, segment_length),
                             1.0, {"lune_angle": lune_angle, "segment_length": segment_length}, horizon)


def build_pinned_hemisphere(segment_length: float = 1.0, horizon: float = 10.0) -> ChartComplex:
    return build_pinned_sector(math.pi, segment_length, horizon)


def build_rationally_attached_line(depth: int = 2, window: float = 2.0,
                                   horizon: float = 10.0) -> ChartComplex:
    """Common line L0 plus lines L1..Ldepth; Lk meets L0 at the multiples of 1/k.

    Lines are truncated to [-window, window]; a point x sits at local
    coordinate x + window on its segment chart.
    """
    if depth < 1 or window <= 0:
        raise ValueError("depth >= 1 and window > 0 required")
    W = float(window)
    geoms = [SegmentGeom("L0", 2 * W)] + [SegmentGeom(f"L{k}", 2 * W) for k in range(1, depth + 1)]
    members: Dict[Fraction, List[Tuple[str, List[float]]]] = {}
    for k in range(1, depth + 1):
        m0, m1 = math.ceil(-W * k - 1e-12), math.floor(W * k + 1e-12)
        for m in range(m0, m1 + 1):
            x = Fraction(m, k)
            members.setdefault(x, [("L0", [float(x) + W])]).append((f"L{k}", [float(x) + W]))
    verts = [members[x] for x in sorted(members)]
    named = {"o": make_point("L0", [W]), "x1": make_point("L0", [W + 1.0]),
             "h": make_point("L0", [W + 0.5 / depth])}
    return PointGluedComplex(f"rational_line(depth={depth},window={W:g})", geoms, verts, named,
                             0.5 / depth, 0.0, {"depth": depth, "window": W}, horizon)


def build_circle(circumference: float = 2 * math.pi, horizon: float = 10.0) -> ChartComplex:
    if circumference <= 0:
        raise ValueError("circumference must be positive")
    seg = SegmentGeom("c", circumference)
    verts = [[("c", [0.0]), ("c", [circumference])]]
    named = {"p": make_point("c", [0.0]), "a": make_point("c", [circumference / 2])}
    return PointGluedComplex(f"circle(c={circumference:.6g})", [seg], verts, named,
                             circumference / 4, 0.0, {"circumference": circumference}, horizon)


def build_circle_with_chord(r0: float = 1.0, chord: Optional[float] = None,
                            horizon: float = 10.0) -> ChartComplex:
    """Unit circle with p1, p2 at arc distance r0, joined by an extra segment.

    The result is three segments between p1 and p2 with lengths r0,
    2 pi - r0 and chord.  chord < r0 would make d(p1, p2) differ from r0,
    so it is rejected.
    """
    chord = r0 if chord is None else chord
    if not 0 < r0 < math.pi:
        raise ValueError("r0 must lie in (0, pi)")
    if chord < r0:
        raise ValueError("chord shorter than r0 changes d(p1, p2); need chord >= r0")
    geoms = [SegmentGeom("arc1", r0), SegmentGeom("arc2", 2 * math.pi - r0), SegmentGeom("chord", chord)]
    verts = [[(g.cid, [0.0]) for g in geoms], [(g.cid, [g.L]) for g in geoms]]
    named = {"p1": make_point("arc1", [0.0]), "p2": make_point("arc1", [r0]),
             "m": make_point("chord", [chord / 2])}
    shortest_cycle = r0 + min(chord, 2 * math.pi - r0)
    return PointGluedComplex(f"circle_chord(r0={r0:g},chord={chord:g})", geoms, verts, named,
                             shortest_cycle / 4, 0.0, {"r0": r0, "chord": chord}, horizon)


def build_tetra_bisphere(horizon: float = 10.0) -> ChartComplex:
    """Two unit spheres glued at the vertices of an inscribed regular tetrahedron."""
    geoms = [SphereGeom("S1"), SphereGeom("S2")]
    verts = [[("S1", v), ("S2", v)] for v in TETRA]
    named = {f"v{i}": make_point("S1", v) for i, v in enumerate(TETRA)}
    named["x1"] = make_point("S1", -TETRA[0])
    named["x2"] = make_point("S2", -TETRA[0])
    return PointGluedComplex("tetra_bisphere", geoms, verts, named, 0.9, 1.0, {}, horizon)


def build_triple_hemisphere(horizon: float = 10.0) -> ChartComplex:
    return TripleHemisphere(horizon)


def build_flat_disk(radius: float = 1.0, horizon: float = 10.0) -> ChartComplex:
    if radius <= 0:
        raise ValueError("radius must be positive")
    disk = DiskGeom("D", radius)
    return PointGluedComplex(f"flat_disk(R={radius:g})", [disk], [],
                             {"o": make_point("D", [0.0, 0.0]), "b": make_point("D", [radius, 0.0])},
                             radius, 0.0, {"radius": radius}, horizon)


def build_flat_plane(horizon: float = 10.0) -> ChartComplex:
    plane = DiskGeom("P", math.inf)
    plane.diameter = 2.0  # nominal scale; sets eta for a chart without a diameter
    return PointGluedComplex("flat_plane", [plane], [], {"o": make_point("P", [0.0, 0.0])},
                             horizon, 0.0, {}, horizon)


def build_unit_sphere(horizon: float = 10.0) -> ChartComplex:
    named = {"n": make_point("S", [0, 0, 1]), "s": make_point("S", [0, 0, -1]),
             "e": make_point("S", [1, 0, 0])}
    return PointGluedComplex("unit_sphere", [SphereGeom("S")], [], named, math.pi / 2, 1.0, {}, horizon)


def build_cube_surface(edge: float = 1.0, horizon: float = 10.0) -> ChartComplex:
    return CubeSurface(edge, horizon)


def build_flat_torus(side: float = 1.0, horizon: float = 10.0) -> ChartComplex:
    return FlatTorus(side, horizon)


def build_cylinder_line(J: int = 3, window: float = 3.0, horizon: float = 10.0) -> ChartComplex:
    return CylinderLine(J, window, horizon)


CATALOG: Dict[str, Callable[..., ChartComplex]] = {
    "line_pile": build_line_pile,
    "pinned_sector": build_pinned_sector,
    "pinned_hemisphere": build_pinned_hemisphere,
    "rational_line": build_rationally_attached_line,
    "circle": build_circle,
    "circle_chord": build_circle_with_chord,
    "tetra_bisphere": build_tetra_bisphere,
    "triple_hemisphere": build_triple_hemisphere,
    "flat_disk": build_flat_disk,
    "flat_plane": build_flat_plane,
    "unit_sphere": build_unit_sphere,
    "cube": build_cube_surface,
    "flat_torus": build_flat_torus,
    "cylinder_line": build_cylinder_line,
}


def build(name: str, **params: Any) -> ChartComplex:
    if name not in CATALOG:
        raise SpaceFileError(f"unknown catalog space {name!r}; known: {', '.join(sorted(CATALOG))}")
    try:
        return CATALOG[name](**params)
    except TypeError as exc:
        raise SpaceFileError(f"bad parameters for {name}: {exc}") from exc


# space-definition files

_GEOMS = {
    "segment": lambda c: SegmentGeom(c["id"], float(c["length"])),
    "sphere": lambda c: SphereGeom(c["id"]),
    "lune": lambda c: LuneGeom(c["id"], float(c["angle"])),
    "disk": lambda c: DiskGeom(c["id"], float(c.get("radius", math.inf))),
}


def _explicit(doc: dict) -> ChartComplex:
    charts = doc.get("charts")
    if not isinstance(charts, list) or not charts:
        raise SpaceFileError("'charts' must be a non-empty list")
    geoms = []
    for c in charts:
        if not isinstance(c, dict) or "id" not in c or c.get("kind") not in _GEOMS:
            raise SpaceFileError(f"bad chart entry {c!r}; kinds: {', '.join(_GEOMS)}")
        try:
            geoms.append(_GEOMS[c["kind"]](c))
        except (KeyError, ValueError) as exc:
            raise SpaceFileError(f"bad chart {c.get('id')}: {exc}") from exc
    ids = {g.cid for g in geoms}
    verts = []
    for glue in doc.get("gluings", []) or []:
        if not isinstance(glue, list) or len(glue) < 2:
            raise SpaceFileError(f"a gluing lists at least two [chart, coords] members: {glue!r}")
        ms = []
        for m in glue:
            if not isinstance(m, list) or len(m) != 2 or m[0] not in ids:
                raise SpaceFileError(f"bad gluing member {m!r}")
            ms.append((m[0], [float(v) for v in (m[1] if isinstance(m[1], list) else [m[1]])]))
        verts.append(ms)
    # lune poles are corners and always count as vertices
    for g in geoms:
        if isinstance(g, LuneGeom):
            for pole in ([0, 0, 1], [0, 0, -1]):
                if not any(c == g.cid and np.allclose(x, pole) for ms in verts for c, x in ms):
                    verts.append([(g.cid, pole)])
    named = {}
    for k, v in (doc.get("points") or {}).items():
        if not isinstance(v, list) or len(v) != 2 or v[0] not in ids:
            raise SpaceFileError(f"bad point {k}: {v!r}")
        named[str(k)] = make_point(v[0], v[1] if isinstance(v[1], list) else [v[1]])
    space = PointGluedComplex(str(doc.get("name", "custom")), geoms, verts, named,
                              doc.get("witness_delta"), doc.get("cba_kappa"), doc.get("params", {}),
                              float(doc.get("horizon", 10.0)))
    _check_connected(space)
    return space


def _check_connected(space: PointGluedComplex) -> None:
    import networkx as nx
    G = nx.Graph()
    G.add_nodes_from(space.geoms)
    for ms in space.vertices:
        for (a, _), (b, _) in zip(ms[:-1], ms[1:]):
            G.add_edge(a, b)
    if not nx.is_connected(G):
        raise SpaceFileError("charts are not connected through the gluings")


def load_space(source: Union[str, Path, dict], overrides: Optional[dict] = None) -> ChartComplex:
    """Build a space from a YAML file, a YAML string, a mapping or a catalog name."""
    overrides = dict(overrides or {})
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        path = Path(text)
        if text in CATALOG:
            return build(text, **overrides)
        if path.suffix in (".yaml", ".yml") or path.exists():
            try:
                doc = yaml.safe_load(path.read_text())
            except OSError as exc:
                raise SpaceFileError(f"cannot read {path}: {exc}") from exc
            except yaml.YAMLError as exc:
                raise SpaceFileError(f"{path}: invalid YAML: {exc}") from exc
        else:
            try:
                doc = yaml.safe_load(text)
            except yaml.YAMLError as exc:
                raise SpaceFileError(f"invalid space text: {exc}") from exc
            if isinstance(doc, str):
                raise SpaceFileError(f"unknown space {text!r}; catalog: {', '.join(sorted(CATALOG))}")
    if not isinstance(doc, dict):
        raise SpaceFileError("a space file must hold a mapping")
    if "builder" in doc:
        params = dict(doc.get("params") or {})
        params.update(overrides)
        return build(str(doc["builder"]), **params)
    if "charts" in doc:
        return _explicit(doc)
    raise SpaceFileError("a space file needs either 'builder' or 'charts'")


def space_hash(space: ChartComplex) -> str:
    blob = yaml.safe_dump(space.describe(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def parse_point(space: ChartComplex, text: str) -> SpacePoint:
    """'name', 'chart:c1,c2,...' or 'c1,c2,...' (first chart)."""
    text = text.strip()
    named = space.named_points()
    if text in named:
        return named[text]
    chart = space.charts[0].id
    coords = text
    if ":" in text:
        chart, coords = text.split(":", 1)
    try:
        vals = [float(v) for v in coords.split(",") if v.strip()]
    except ValueError as exc:
        raise SpaceFileError(f"cannot parse point {text!r}") from exc
    if not vals:
        raise SpaceFileError(f"cannot parse point {text!r}")
    p = make_point(chart, vals)
    if not space.in_domain(p):
        raise SpaceFileError(f"point {text!r} lies outside chart {chart!r}")
    return space.canonical(p)
