"""Bridges between nearby geodesics and the relative Rauch inequality.

Two meridians leaving the north pole at angle h form a bridge of height h.
As h shrinks, the bound on the ratio of their separations at r and R
closes in on sin(r)/sin(R).
"""
import math

import numpy as np

from lengthlab import build
from lengthlab.formats import comparison_bridge_svg
from lengthlab.rauch_bridges import (angle_comparison_test, build_bridge, cat_triangle_test,
                                     develop_comparison_bridge, meridian_bridge, random_bridge,
                                     rel_rauch_audit)

print(f"limit sin(.5)/sin(1) = {math.sin(0.5) / math.sin(1.0):.6f}")
prev = None
for h in (0.1, 0.05, 0.025):
    S, g, s = meridian_bridge(h)
    rec = rel_rauch_audit(build_bridge(S, g, s, N=8, align=(0.5, 1.0)), 0.5, 1.0)
    gap = rec.rhs - rec.limit
    ratio = "" if prev is None else f"  gap ratio {prev / gap:.3f}"
    print(f"h={h:<6} lhs={rec.lhs:.6f} rhs={rec.rhs:.6f} gap={gap:.5f}{ratio}")
    prev = gap

cb = develop_comparison_bridge(build_bridge(*meridian_bridge(0.1), N=8))
with open("comparison_bridge.svg", "w") as fh:
    fh.write(comparison_bridge_svg(cb))
print(f"comparison bridge: side error {cb.side_error:.2e}, min angle sum - pi {cb.min_angle_sum() - math.pi:+.4f}"
      " -> comparison_bridge.svg")

T3 = build("triple_hemisphere")
rng = np.random.default_rng(5)
recs = [rel_rauch_audit(b, r, R) for b, r, R in filter(None, (random_bridge(T3, rng) for _ in range(20)))]
print(f"triple hemisphere: {sum(r.holds for r in recs)}/{len(recs)} random bridges satisfy the bound")

P = build("flat_plane")
for k in (0.0, -1.0):
    res = cat_triangle_test(P, k, 30, radius=1.0)
    print(f"flat plane vs CAT({k:+.0f}): {'certificate' if res.ok else 'counterexample'} "
          f"after {res.samples} triangles, worst excess {res.worst:.3g}")
print("sphere angle test:", angle_comparison_test(build("unit_sphere"), 1.0, 30).ok)
