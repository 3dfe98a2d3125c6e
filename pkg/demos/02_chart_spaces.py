"""The catalog of example spaces, and a user-defined space from YAML."""
from lengthlab import CATALOG, build, load_space, parse_point

for name in CATALOG:
    S = build(name)
    print(f"{name:18s} {S.name:34s} charts={len(S.charts)}  eta={S.eta:.4g}  "
          f"delta_local={S.delta_local:.4g}  CBA={S.cba_kappa}")

# two disks touching at one point; the only route between them goes through it
doc = """
charts:
  - {id: A, kind: disk, radius: 1}
  - {id: B, kind: disk, radius: 1}
gluings:
  - [[A, [1, 0]], [B, [-1, 0]]]
cba_kappa: 0.0
"""
S = load_space(doc)
a, b = parse_point(S, "A:0,0"), parse_point(S, "B:0,0")
print("two touching disks: d(centre A, centre B) =", S.distance(a, b))
