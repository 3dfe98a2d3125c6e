"""Cut loci, the five injectivity radii, and the Klingenberg alternative."""
import time

from lengthlab import build
from lengthlab.cut_locus import (RADII, check_radius_chain, find_cut_points, global_radii,
                                 klingenberg_search, radius_report)

S = build("pinned_sector")
rep = radius_report(S, S.point("p1"), 10.0, ult_conj=False)
print("pinned sector at p1:", {k: rep.formatted(k) for k in RADII[:5]})
print("  the antipodal pole is a cut point, but the segments glued there keep minimizing")

U = build("unit_sphere")
cuts = find_cut_points(U, U.point("n"), 4.0, n_dirs=4)
far = max(U.distance(c.q, U.point("s")) for c in cuts.points)
print(f"unit sphere: {len(cuts.points)} cut points seen from n, all within {far:.1e} of the south pole")

for name, H in (("circle_chord", 3.0), ("flat_torus", 1.5)):
    sp = build(name)
    t = time.time()
    g = global_radii(sp, H, n_random=1, n_dirs=8)
    chk = check_radius_chain(sp, g)
    print(f"{name}: global radii {[g.formatted(k) for k in RADII[:5]]} chain ok={chk.ok} "
          f"({time.time() - t:.1f} s)")

for name in ("circle_chord", "flat_torus", "unit_sphere"):
    r = klingenberg_search(build(name))
    what = f"closed geodesic of length {r.loop_length:.4f}" if r.branch == "loop" else \
        f"ultimate pair at distance {r.pair_distance:.4f}"
    print(f"Klingenberg on {name}: MinRad {r.min_rad:.4f}, {what}")
