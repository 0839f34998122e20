"""Quaternion rotations.

Quaternions are stored as numpy arrays ``(a, b, c, d)`` meaning
``a + b i + c j + d k`` (scalar first).  Every function that returns a
rotation quaternion returns it in canonical sign: ``a >= 0``, and when
``a == 0`` the first nonzero vector component is positive.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

_UNIT_TOL = 1e-6
_ANTIPARALLEL_TOL = 1e-9


def canonical(q) -> np.ndarray:
    """Return ``q`` or ``-q``, whichever is in canonical sign."""
    q = np.asarray(q, dtype=float)
    for comp in q:
        if comp > 0:
            return q.copy()
        if comp < 0:
            return -q
    return q.copy()


def _unit(v, what="axis") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0 or not np.isfinite(n):
        raise ValueError(f"zero {what}")
    return v / n


def quat_axis_angle(axis, angle: float) -> np.ndarray:
    """Rotation by ``angle`` radians about ``axis`` (renormalized)."""
    u = _unit(axis)
    half = 0.5 * angle
    return canonical(np.concatenate([[np.cos(half)], np.sin(half) * u]))


def quat_to_matrix(q) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion."""
    q = np.asarray(q, dtype=float)
    if abs(q @ q - 1.0) > _UNIT_TOL:
        raise ValueError(f"quaternion is not unit (norm^2 = {q @ q!r})")
    a, b, c, d = q
    return np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * b * c - 2 * a * d, 2 * a * c + 2 * b * d],
            [2 * a * d + 2 * b * c, a * a - b * b + c * c - d * d, 2 * c * d - 2 * a * b],
            [2 * b * d - 2 * a * c, 2 * a * b + 2 * c * d, a * a - b * b - c * c + d * d],
        ]
    )


def quat_between(src, dst) -> np.ndarray:
    """Shortest-arc rotation taking unit vector ``src`` onto ``dst``.

    Uses the half-angle form ``a = sqrt((1 + src.dst) / 2)``,
    ``(b, c, d) = src x dst / (2a)``, evaluated through the normalized
    bisector ``h = (src + dst) / |src + dst|`` as ``a = src.h``,
    ``(b, c, d) = src x h``.  The two are algebraically identical; the
    bisector form keeps full precision when the vectors are nearly
    opposite.  Exactly opposite vectors get a half turn about
    ``src x e_x`` (or ``src x e_y`` if that is too short).
    """
    s = _unit(src, "vector")
    t = _unit(dst, "vector")
    half = s + t
    n = np.linalg.norm(half)
    if n <= _ANTIPARALLEL_TOL:
        u = np.cross(s, [1.0, 0.0, 0.0])
        if np.linalg.norm(u) < 1e-6:
            u = np.cross(s, [0.0, 1.0, 0.0])
        u = u / np.linalg.norm(u)
        return canonical(np.concatenate([[0.0], u]))
    h = half / n
    return canonical(np.concatenate([[s @ h], np.cross(s, h)]))


def compose(q2, q1) -> np.ndarray:
    """Hamilton product ``q2 * q1``: apply ``q1`` first, then ``q2``."""
    a2, b2, c2, d2 = np.asarray(q2, dtype=float)
    a1, b1, c1, d1 = np.asarray(q1, dtype=float)
    q = np.array(
        [
            a2 * a1 - b2 * b1 - c2 * c1 - d2 * d1,
            a2 * b1 + b2 * a1 + c2 * d1 - d2 * c1,
            a2 * c1 - b2 * d1 + c2 * a1 + d2 * b1,
            a2 * d1 + b2 * c1 - c2 * b1 + d2 * a1,
        ]
    )
    return canonical(q)


def apply(R, v) -> np.ndarray:
    return np.asarray(R, dtype=float) @ np.asarray(v, dtype=float)


def rotate(q, v) -> np.ndarray:
    """Rotate 3-vector ``v`` by quaternion ``q``."""
    return apply(quat_to_matrix(q), v)


def quat_distance(q1, q2) -> float:
    """Max-abs component difference, minimized over the sign of ``q2``."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    return float(min(np.abs(q1 - q2).max(), np.abs(q1 + q2).max()))


def normalize(q) -> np.ndarray:
    """Scale a near-unit quaternion to unit length, canonical sign."""
    return canonical(_unit(q, "quaternion"))
