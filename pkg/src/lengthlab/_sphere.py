"""Unit-sphere helpers shared by the spherical kernels."""
from __future__ import annotations

import math

import numpy as np

EZ = np.array([0.0, 0.0, 1.0])
EX = np.array([1.0, 0.0, 0.0])
EY = np.array([0.0, 1.0, 0.0])


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / math.sqrt(float(v @ v))


def angle(a, b) -> float:
    # scalar arithmetic: numpy call overhead dominates for 3-vectors
    a0, a1, a2 = float(a[0]), float(a[1]), float(a[2])
    b0, b1, b2 = float(b[0]), float(b[1]), float(b[2])
    c0, c1, c2 = a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0
    return math.atan2(math.sqrt(c0 * c0 + c1 * c1 + c2 * c2), a0 * b0 + a1 * b1 + a2 * b2)


def angles(A, B) -> np.ndarray:
    """Row-wise great-circle distances between two (n, 3) arrays."""
    cr = np.linalg.norm(np.cross(A, B), axis=-1)
    return np.arctan2(cr, np.einsum("ij,ij->i", A, B))


def frame(a):
    """Canonical tangent frame at a: east and north, or x and y at the poles."""
    a = np.asarray(a, dtype=float)
    if abs(a[2]) > 1 - 1e-12:
        return EX.copy(), EY.copy()
    e1 = unit(np.cross(EZ, a))
    e2 = np.cross(a, e1)
    return e1, e2


def direction(a, theta):
    e1, e2 = frame(a)
    return math.cos(theta) * e1 + math.sin(theta) * e2


def tangent_toward(a, b):
    """Unit tangent at a of the minor arc to b (undefined for b = +-a)."""
    u = np.asarray(b, dtype=float) - np.dot(a, b) * np.asarray(a, dtype=float)
    n = np.linalg.norm(u)
    if n < 1e-15:
        return None
    return u / n


def is_antipodal(a, b, tol=1e-9) -> bool:
    return math.hypot(float(a[0]) + float(b[0]), float(a[1]) + float(b[1]),
                      float(a[2]) + float(b[2])) < tol


def is_same(a, b, tol=1e-9) -> bool:
    return math.hypot(float(a[0]) - float(b[0]), float(a[1]) - float(b[1]),
                      float(a[2]) - float(b[2])) < tol


def longitude(v) -> float:
    return math.atan2(v[1], v[0]) % (2 * math.pi)


def arc_point(a, u, s):
    return unit(math.cos(s) * np.asarray(a) + math.sin(s) * np.asarray(u))
