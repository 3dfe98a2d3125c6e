"""Model planes of curvature k: distances, comparison triangles, angles.

The same three side lengths give a fatter triangle on the sphere and a
thinner one in the hyperbolic plane; the angle sums show it.
"""
import math

from lengthlab import model_space as ms

sides = (1.0, 1.2, 0.9)
print("sides", sides)
for k in (1.0, 0.0, -1.0):
    tri = ms.comparison_triangle(k, *sides)
    print(f"k={k:+.0f}  D_k={ms.diameter_bound(k):.4f}  angles={[round(a, 4) for a in tri.angles]}  "
          f"sum-pi={sum(tri.angles) - math.pi:+.4f}")

# midpoint of side 0 to the opposite vertex, in each model
for k in (1.0, 0.0, -1.0):
    tri = ms.comparison_triangle(k, *sides)
    m = ms.point_along(k, tri.vertices[0], tri.vertices[1], 0.5)
    print(f"k={k:+.0f}  median length {ms.model_distance(k, m, tri.vertices[2]):.6f}")

print("warping sn_k(1):", {k: round(ms.warping(k, 1.0), 6) for k in (1.0, 0.0, -1.0)})
