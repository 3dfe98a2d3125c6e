"""Fans along curves and the long-homotopy audit on the sphere.

The fan of the equator from e grows along the equator until it reaches
the antipode at length pi; there it must stop.  Shrinking the equator to
the pole through latitude circles forces the two half fans apart at the
last row, which shows that an ultimate bound above pi is impossible.
"""
import math

import numpy as np

from lengthlab import build
from lengthlab.fans_homotopy import (build_fan, fan_length_check, long_homotopy_audit, random_polyline,
                                     rotate_to_pole)
from lengthlab.formats import fan_svg
from lengthlab.paths import ArcPiece, GeodesicPath

S = build("unit_sphere")
eq = GeodesicPath(S, [ArcPiece("S", np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), 2 * math.pi)],
                  base=S.point("e"), closed=True)
f = build_fan(S, eq, math.pi, n_samples=400)
print(f"equator fan: {f.status} at s={f.stop_s:.4f}, limsup length {f.limsup:.4f}")
with open("equator_fan.svg", "w") as fh:
    fh.write(fan_svg(f, every=10))

rng = np.random.default_rng(0)
T = build("flat_torus")
checks = [fan_length_check(build_fan(T, random_polyline(T, rng), math.inf, n_samples=32)) for _ in range(5)]
print("flat torus fans never outgrow their curve:", all(c.ok for c in checks))

H = rotate_to_pole(S, 32, 16)
for bound in (math.pi, 4.0):
    rep = long_homotopy_audit(S, eq, H, bound)
    print(f"ult_bound={bound:.4f}: {rep.status}; {rep.detail}")
