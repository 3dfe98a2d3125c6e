"""Conjugate-point detectors on the unit sphere, and the Alexander-Bishop step.

A pole-to-pole meridian is conjugate in every sense: nearby endpoints are
joined by several geodesics close to it.  A geodesic of length 0.6 pi has
none of that.
"""
import math
import time

import numpy as np

from lengthlab import build
from lengthlab.conjugacy import (ABConfig, NearestFamily, default_schedule, detect_symmetric,
                                 detect_ultimate, detect_unreachable, extend_family_AB, ult_conj_radius)

S = build("unit_sphere")
sch = default_schedule(S)
print("schedule radii", [round(r, 5) for r in sch.radii], "hash", sch.hash)

n, s = S.point("n"), S.point("s")
meridian = min(S.geodesics(n, s, math.pi + 0.1, 0.1), key=lambda g: g.sort_key())
short = S.rays(n, 0.6 * math.pi, n_dirs=2)[0]
for label, g in (("meridian", meridian), ("0.6 pi", short)):
    verdicts = [f(S, g, sch).kind for f in (detect_symmetric, detect_unreachable, detect_ultimate)]
    print(f"{label:9s} symmetric/unreachable/ultimate -> {verdicts}")

t = time.time()
r = ult_conj_radius(S, S.point("e"), 4.0, sch, n_dirs=2)
print(f"ultimate conjugate radius at e: {r} (pi = {math.pi:.5f}), {time.time() - t:.1f} s")

T, T0 = 2 * math.pi / 3, 0.1
cfg = ABConfig.from_lengths(T, T0)
print("T0 constraints (must be < 0.75 and < 1.25):", [round(c, 5) for c in ABConfig.constant_checks(T0)])
ray = S.rays(S.point("e"), T + T0 / 6, n_dirs=4)[1]
rng = np.random.default_rng(0)
u = S.random_step(ray.start, 0.9 * cfg.delta3, rng)
w = S.random_step(ray.end, 0.9 * cfg.delta4, rng)
res = extend_family_AB(S, NearestFamily(S, ray.sub_length(0, T), 0.2), ray, cfg, u, w)
print(f"AB iteration: converged={res.converged} after {res.iterations} steps, "
      f"max ratio {max(res.ratios):.4f} (bound {45 / 48:.4f}), certified={res.certified}")
