"""Report serialization: CSV, JSON-lines and small SVG figures.

Everything here is deterministic for a given input so reruns of the same
command produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .paths import GeodesicPath, SpacePoint

GEODESIC_CSV_HEADER = ["index", "length", "start", "end", "route"]


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, SpacePoint):
        return str(obj)
    return obj


def jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(clean(r), sort_keys=True) + "\n" for r in records)


def geodesics_csv(paths: Sequence[GeodesicPath]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GEODESIC_CSV_HEADER)
    for i, g in enumerate(paths):
        route = " ".join("/".join(str(x) for x in r) for r in g.route)
        w.writerow([i, f"{g.length:.12g}", str(g.start), str(g.end), route])
    return buf.getvalue()


def rows_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


# SVG

def _fmt(x: float) -> str:
    return f"{x:.6g}"


def svg_document(layers: Sequence[Tuple[np.ndarray, str]], labels: Sequence[Tuple[float, float, str]] = (),
                 size: int = 480, title: Optional[str] = None) -> str:
    """Polylines (N x 2 arrays with a stroke colour) on a shared, y-up canvas."""
    pts = [np.asarray(a, float) for a, _ in layers if len(a)]
    allp = np.vstack(pts) if pts else np.zeros((1, 2))
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    pad = 0.05 * span
    scale = size / (span + 2 * pad)

    def xy(p):
        return (p[0] - lo[0] + pad) * scale, (hi[1] - p[1] + pad) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">']
    if title:
        out.append(f"<title>{title}</title>")
    for arr, colour in layers:
        arr = np.asarray(arr, float)
        if len(arr) == 0:
            continue
        coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (xy(p) for p in arr))
        out.append(f'<polyline points="{coords}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
    for x, y, text in labels:
        a, b = xy((x, y))
        out.append(f'<text x="{_fmt(a)}" y="{_fmt(b)}" font-size="10">{text}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def comparison_bridge_svg(cb, annotate: bool = True) -> str:
    """Decks in black, struts and diagonals in grey, angle sums as labels."""
    up, low = cb.planar()
    layers = [(up, "black"), (low, "black")]
    for j in range(len(up) - 1):
        layers.append((np.array([up[j], low[j]]), "#999"))
        layers.append((np.array([up[j], low[j + 1]]), "#ccc"))
    layers.append((np.array([up[-1], low[-1]]), "#999"))
    labels = []
    if annotate:
        for j, a in enumerate(cb.upper_angle_sums, start=1):
            if not math.isnan(a):
                labels.append((up[j][0], up[j][1], f"{a:.4f}"))
    return svg_document(layers, labels, title="comparison bridge")


def planar(p: SpacePoint) -> np.ndarray:
    """Schematic 2D position: chart coordinates, or (longitude, latitude) for 3D charts."""
    c = p.array
    if len(c) == 1:
        return np.array([c[0], 0.0])
    if len(c) == 2:
        return c
    return np.array([math.atan2(c[1], c[0]), math.asin(max(-1.0, min(1.0, c[2])))])


def fan_svg(fan, per_geodesic: int = 24, every: int = 1) -> str:
    layers = []
    for g in fan.paths[::every]:
        if g.is_trivial:
            continue
        layers.append((np.array([planar(p) for p in g.sample(per_geodesic)]), "#4477aa"))
    C = fan.curve
    if not C.is_trivial:
        layers.append((np.array([planar(p) for p in C.sample(4 * per_geodesic)]), "black"))
    return svg_document(layers, title=f"fan ({fan.status})")


def write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        import sys
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)
