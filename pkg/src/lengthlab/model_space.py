"""Constant-curvature model surfaces M2_k.

Points live on the sphere of radius 1/sqrt(k) for k > 0, in the plane for
k = 0, and on the upper sheet of the hyperboloid -x0^2 + x1^2 + x2^2 = 1/k
for k < 0.  Every function here is pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

INF = math.inf

# slack allowed on law-of-cosines arguments before it counts as an error
COS_TOL = 1e-12


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a closed form."""


def diameter_bound(kappa: float) -> float:
    """D_k: pi/sqrt(k) for k > 0, and the extended-real +inf otherwise."""
    if kappa > 0:
        return math.pi / math.sqrt(kappa)
    return INF


def _radius(kappa: float) -> float:
    return 1.0 / math.sqrt(abs(kappa))


@dataclass(frozen=True)
class ModelPoint:
    kappa: float
    coords: Tuple[float, ...]

    def __post_init__(self):
        x = np.asarray(self.coords, dtype=float)
        if self.kappa == 0:
            ok = x.shape == (2,)
        elif self.kappa > 0:
            rho = _radius(self.kappa)
            ok = x.shape == (3,) and abs(np.linalg.norm(x) - rho) <= 1e-12 * max(1.0, rho)
        else:
            rho = _radius(self.kappa)
            q = -x[0] ** 2 + x[1] ** 2 + x[2] ** 2 if x.shape == (3,) else 0.0
            ok = x.shape == (3,) and x[0] > 0 and abs(q + rho * rho) <= 1e-12 * max(1.0, x[0] ** 2)
        if not ok:
            raise DomainError(f"coordinates {self.coords} are not on M2_{self.kappa}")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def origin(kappa: float) -> ModelPoint:
    if kappa == 0:
        return ModelPoint(0.0, (0.0, 0.0))
    rho = _radius(kappa)
    if kappa > 0:
        return ModelPoint(kappa, (0.0, 0.0, rho))
    return ModelPoint(kappa, (rho, 0.0, 0.0))


def polar_point(kappa: float, r: float, theta: float) -> ModelPoint:
    """The point at distance r from the origin, leaving at angle theta."""
    c, s = math.cos(theta), math.sin(theta)
    if kappa == 0:
        return ModelPoint(0.0, (r * c, r * s))
    rho = _radius(kappa)
    if kappa > 0:
        a = r / rho
        v = np.array([math.sin(a) * c, math.sin(a) * s, math.cos(a)])
        v /= np.linalg.norm(v)
        return ModelPoint(kappa, tuple(rho * v))
    a = r / rho
    sh = math.sinh(a)
    x1, x2 = rho * sh * c, rho * sh * s
    x0 = math.sqrt(rho * rho + x1 * x1 + x2 * x2)
    return ModelPoint(kappa, (x0, x1, x2))


def _lorentz(a: np.ndarray, b: np.ndarray) -> float:
    return float(-a[0] * b[0] + a[1] * b[1] + a[2] * b[2])


def model_distance(kappa: float, a: ModelPoint, b: ModelPoint) -> float:
    if a.kappa != kappa or b.kappa != kappa:
        raise ValueError("points carry a different curvature tag")
    x, y = a.array, b.array
    if kappa == 0:
        return float(np.hypot(*(x - y)))
    rho = _radius(kappa)
    if kappa > 0:
        return rho * math.atan2(float(np.linalg.norm(np.cross(x, y))), float(x @ y))
    # chord form is stable near zero, unlike arccosh
    dv = x - y
    chord2 = max(_lorentz(dv, dv), 0.0)
    return 2.0 * rho * math.asinh(math.sqrt(chord2) / (2.0 * rho))


def warping(kappa: float, r: float) -> float:
    """f_k(r): sin, identity or sinh, rescaled to curvature k."""
    if r < 0:
        raise DomainError("warping needs r >= 0")
    if kappa > 0:
        if r >= diameter_bound(kappa):
            raise DomainError(f"r={r} is not below D_k={diameter_bound(kappa)}")
        k = math.sqrt(kappa)
        return math.sin(k * r) / k
    if kappa == 0:
        return float(r)
    k = math.sqrt(-kappa)
    return math.sinh(k * r) / k


def arc_chord_error(kappa: float, s: float, h: float) -> float:
    """alpha_k(s, h), the arc-chord error term of the relative bridge bound.

    k = 0 and k = 1 use the published closed forms.  Other curvatures use
    the rescaled analog: k > 0 rescales alpha_1, k < 0 swaps in the
    hyperbolic Pythagorean relation.  That generalization is ours.
    """
    if h < 0 or s < 0:
        raise DomainError("alpha needs s, h >= 0")
    if h > s:
        raise DomainError(f"alpha needs h <= s, got h={h}, s={s}")
    if h == 0:
        return 0.0
    if kappa == 0:
        return 2.0 * (s - math.sqrt(s * s - h * h))
    k = math.sqrt(abs(kappa))
    a, b = k * s, k * h
    if kappa > 0:
        arg = math.cos(a) / math.cos(b)
        if abs(arg) > 1.0 + COS_TOL or math.cos(b) <= 0:
            raise DomainError(f"alpha_k undefined at s={s}, h={h}")
        return abs(a - math.acos(min(1.0, max(-1.0, arg)))) / k
    arg = math.cosh(a) / math.cosh(b)
    return abs(a - math.acosh(max(1.0, arg))) / k


def _half_angle_sin2(kappa: float, x: float, y: float, z: float) -> float:
    """sin^2(g/2) for the angle g between sides x, y opposite z.

    Haversine-type forms avoid the cancellation the plain law of cosines
    suffers on thin or tiny triangles.
    """
    if kappa == 0:
        num = z * z - (x - y) ** 2
        den = 4.0 * x * y
    elif kappa > 0:
        k = math.sqrt(kappa)
        num = math.sin(k * z / 2) ** 2 - math.sin(k * (x - y) / 2) ** 2
        den = math.sin(k * x) * math.sin(k * y)
    else:
        k = math.sqrt(-kappa)
        num = math.sinh(k * z / 2) ** 2 - math.sinh(k * (x - y) / 2) ** 2
        den = math.sinh(k * x) * math.sinh(k * y)
    val = num / den
    if val < -COS_TOL or val > 1.0 + COS_TOL:
        raise DomainError(f"law-of-cosines argument out of range for sides {x}, {y}, {z}")
    return min(1.0, max(0.0, val))


def _check_sides(kappa: float, a: float, b: float, c: float) -> None:
    if min(a, b, c) < 0:
        raise DomainError("side lengths must be nonnegative")
    scale = max(1.0, a + b + c)
    slack = 1e-12 * scale
    if a > b + c + slack or b > a + c + slack or c > a + b + slack:
        raise DomainError(f"sides {a}, {b}, {c} violate the triangle inequality")
    if a + b + c >= 2.0 * diameter_bound(kappa):
        raise DomainError(f"perimeter {a + b + c} is not below 2 D_k")


def comparison_angle(kappa: float, a: float, b: float, c: float) -> float:
    """Angle at the vertex between sides a and b, opposite side c.

    A zero adjacent side has no angle; 0 is returned by convention.
    """
    _check_sides(kappa, a, b, c)
    if a == 0 or b == 0:
        return 0.0
    return 2.0 * math.asin(math.sqrt(_half_angle_sin2(kappa, a, b, c)))


@dataclass(frozen=True)
class ModelTriangle:
    """Side i runs from vertex i to vertex i+1 (mod 3); angles[i] sits at vertex i."""

    kappa: float
    sides: Tuple[float, float, float]
    vertices: Tuple[ModelPoint, ModelPoint, ModelPoint]
    angles: Tuple[float, float, float]


def comparison_triangle(kappa: float, a: float, b: float, c: float) -> ModelTriangle:
    """Triangle with |V0V1| = a, |V1V2| = b, |V2V0| = c in canonical position.

    V0 sits at the origin and V1 along the direction theta = 0; V2 is on
    the positive side.
    """
    _check_sides(kappa, a, b, c)
    ang0 = comparison_angle(kappa, a, c, b)
    ang1 = comparison_angle(kappa, a, b, c)
    ang2 = comparison_angle(kappa, b, c, a)
    v0 = origin(kappa)
    v1 = polar_point(kappa, a, 0.0)
    v2 = polar_point(kappa, c, ang0)
    return ModelTriangle(kappa, (a, b, c), (v0, v1, v2), (ang0, ang1, ang2))


def point_along(kappa: float, p: ModelPoint, q: ModelPoint, t: float) -> ModelPoint:
    """Point at arclength t from p on the model geodesic towards q."""
    d = model_distance(kappa, p, q)
    if t < -1e-12 or t > d + 1e-9 * max(1.0, d):
        raise DomainError(f"arclength {t} outside [0, {d}]")
    t = min(max(t, 0.0), d)
    if d == 0:
        return p
    x, y = p.array, q.array
    if kappa == 0:
        return ModelPoint(0.0, tuple(x + (y - x) * (t / d)))
    rho = _radius(kappa)
    if kappa > 0:
        u = y - (x @ y) / (rho * rho) * x
        u = u / np.linalg.norm(u) * rho
        z = math.cos(t / rho) * x + math.sin(t / rho) * u
        z = z / np.linalg.norm(z) * rho
        return ModelPoint(kappa, tuple(z))
    u = y + _lorentz(x, y) / (rho * rho) * x
    u = u / math.sqrt(_lorentz(u, u)) * rho
    z = math.cosh(t / rho) * x + math.sinh(t / rho) * u
    z[0] = math.sqrt(rho * rho + z[1] ** 2 + z[2] ** 2)
    return ModelPoint(kappa, tuple(z))


def comparison_points_distance(tri: ModelTriangle, side1: int, t1: float,
                               side2: int, t2: float) -> float:
    """Model distance between points at arclengths t1, t2 along two sides.

    Each arclength is measured from the side's starting corner.
    """
    k = tri.kappa
    pts = []
    for side, t in ((side1, t1), (side2, t2)):
        if side not in (0, 1, 2):
            raise ValueError(f"side index {side} is not 0, 1 or 2")
        length = tri.sides[side]
        if t < -1e-12 or t > length + 1e-12 * max(1.0, length):
            raise DomainError(f"arclength {t} outside side {side} of length {length}")
        p, q = tri.vertices[side], tri.vertices[(side + 1) % 3]
        pts.append(point_along(k, p, q, min(max(t, 0.0), length)))
    return model_distance(k, pts[0], pts[1])


def angle_at(kappa: float, p: ModelPoint, x: ModelPoint, y: ModelPoint) -> float:
    """Model angle at p between the geodesics to x and y."""
    a = model_distance(kappa, p, x)
    b = model_distance(kappa, p, y)
    c = model_distance(kappa, x, y)
    # side lengths read off placements can break the inequality by rounding
    c = min(max(c, abs(a - b)), a + b)
    if a == 0 or b == 0:
        return 0.0
    return 2.0 * math.asin(math.sqrt(_half_angle_sin2(kappa, a, b, c)))


def _unit_tangent(kappa: float, p: ModelPoint, q: ModelPoint) -> np.ndarray:
    """Unit tangent at p pointing to q (ambient coordinates)."""
    x, y = p.array, q.array
    if kappa == 0:
        v = y - x
        return v / math.hypot(v[0], v[1])
    rho = _radius(kappa)
    if kappa > 0:
        u = y - (x @ y) / (rho * rho) * x
        return u / np.linalg.norm(u)
    u = y + _lorentz(x, y) / (rho * rho) * x
    return u / math.sqrt(_lorentz(u, u))


def _left_normal(kappa: float, p: ModelPoint, u: np.ndarray) -> np.ndarray:
    """u rotated a quarter turn counterclockwise in the tangent plane at p."""
    if kappa == 0:
        return np.array([-u[1], u[0]])
    rho = _radius(kappa)
    n = np.cross(p.array / rho, u)
    if kappa < 0:
        n[0] = -n[0]
        n = n / math.sqrt(_lorentz(n, n))
    else:
        n = n / np.linalg.norm(n)
    return n


def exp_map(kappa: float, p: ModelPoint, w: np.ndarray, t: float) -> ModelPoint:
    """Point at distance t from p along the unit tangent w."""
    x = p.array
    if kappa == 0:
        return ModelPoint(0.0, tuple(x + t * w))
    rho = _radius(kappa)
    if kappa > 0:
        z = math.cos(t / rho) * x + rho * math.sin(t / rho) * w
        z = z / np.linalg.norm(z) * rho
        return ModelPoint(kappa, tuple(z))
    z = math.cosh(t / rho) * x + rho * math.sinh(t / rho) * w
    z[0] = math.sqrt(rho * rho + z[1] ** 2 + z[2] ** 2)
    return ModelPoint(kappa, tuple(z))


def place_by_distances(kappa: float, p: ModelPoint, q: ModelPoint, dp: float, dq: float,
                       side: int = 1, fallback: Optional[np.ndarray] = None) -> ModelPoint:
    """The point x with |px| = dp, |qx| = dq, left of p -> q (side=+1) or right (-1).

    When p and q coincide the direction is undefined; fallback (a unit
    tangent at p) is used, or the chart's first axis.
    """
    dpq = model_distance(kappa, p, q)
    if dp == 0:
        return p
    if dpq < 1e-14:
        if fallback is None:
            fallback = _axis(kappa, p)
        return exp_map(kappa, p, fallback, dp)
    dq = min(max(dq, abs(dpq - dp)), dpq + dp)
    a = comparison_angle(kappa, dpq, dp, dq)
    u = _unit_tangent(kappa, p, q)
    n = _left_normal(kappa, p, u)
    return exp_map(kappa, p, math.cos(a) * u + side * math.sin(a) * n, dp)


def _axis(kappa: float, p: ModelPoint) -> np.ndarray:
    if kappa == 0:
        return np.array([1.0, 0.0])
    e = np.array([0.0, 1.0, 0.0])
    x = p.array
    rho = _radius(kappa)
    if kappa > 0:
        u = e - (x @ e) / (rho * rho) * x
        if np.linalg.norm(u) < 1e-12:
            u = np.array([1.0, 0.0, 0.0]) - x[0] / (rho * rho) * x
        return u / np.linalg.norm(u)
    u = e + _lorentz(x, e) / (rho * rho) * x
    return u / math.sqrt(_lorentz(u, u))


def orientation(kappa: float, a: ModelPoint, b: ModelPoint, c: ModelPoint) -> float:
    """Positive when a, b, c turn counterclockwise."""
    if kappa == 0:
        (x0, y0), (x1, y1), (x2, y2) = a.array, b.array, c.array
        return (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
    u = _unit_tangent(kappa, a, b)
    n = _left_normal(kappa, a, u)
    w = c.array
    return float(w @ n) if kappa > 0 else _lorentz(w, n)
