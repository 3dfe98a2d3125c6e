"""Enumerating geodesics, d_Gamma between them, and curve shortening."""
import math

from lengthlab import build
from lengthlab.geodesic_engine import d_gamma, enumerate_geodesics, polyline_path, shorten
from lengthlab.paths import make_point

T = build("flat_torus")
p, q = make_point("T", [0.2, 0.3]), make_point("T", [0.7, 0.8])
gs = enumerate_geodesics(T, p, q, 1.2)
print(f"flat torus: {len(gs)} geodesics of length <= 1.2 from {p} to {q}")
for g in sorted(gs, key=lambda g: g.length)[:6]:
    print(f"  length {g.length:.6f}")

C = build("circle_chord")
p1, p2 = C.point("p1"), C.point("p2")
gs = sorted(enumerate_geodesics(C, p1, p2, 3.5), key=lambda g: g.length)
print("circle with chord, p1 -> p2:", [round(g.length, 4) for g in gs])
print("d_Gamma between the two shortest:", round(d_gamma(gs[0], gs[1]), 4))

S = build("unit_sphere")
pts = [S.canonical(make_point("S", [math.cos(t), math.sin(t), 0.3 * math.sin(3 * t)]))
       for t in [0.0, 0.5, 1.0, 1.5, 2.0]]
res = shorten(S, pts)
print(f"sphere: shortened a wiggly polyline from {polyline_path(S, pts).length:.4f} to "
      f"{res.path.length:.4f} in {res.iterations} sweeps "
      f"(geodesic distance {S.distance(pts[0], pts[-1]):.4f}, certified={res.certified})")
