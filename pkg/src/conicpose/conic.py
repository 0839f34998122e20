"""Ellipse <-> circle geometry in covariance form.

A solid ellipse is described by its centre ``mu`` and covariance ``C``:
it is the set of points ``p`` with ``(p - mu)^T C^-1 (p - mu) <= 4``.
The covariance of that solid region is exactly ``C``, so blob moments
plug straight in.  Matrices are indexed ``C[0, 0] = C_xx``,
``C[1, 1] = C_yy`` with x the column (rightward) and y the row
(downward) coordinate.

A circle of radius ``r`` with unit normal ``phi`` projects orthogonally
along z onto the ellipse with covariance

    C = r^2/4 * [[1 - phi_x^2, -phi_x phi_y], [-phi_x phi_y, 1 - phi_y^2]]

and conversely ``r = a1`` and ``phi = (+-sqrt(a1^2 - 4 C_xx),
+-sqrt(a1^2 - 4 C_yy), -a2) / a1``.  Normals use the ``phi_z < 0``
convention throughout, which leaves two candidates per ellipse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_CLAMP_TOL = 1e-9


class DegenerateEllipse(ValueError):
    """Covariance is singular, indefinite, or not an ellipse."""


@dataclass(frozen=True)
class EllipseCov:
    mu: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(2)
        C = np.asarray(self.C, dtype=float).reshape(2, 2)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "C", C)


@dataclass(frozen=True)
class AxesSpec:
    """Eigenstructure of an ellipse covariance.

    ``a1``/``a2`` are the major/minor semi-axes, ``2 sqrt(lambda)``.
    """

    lam1: float
    lam2: float
    a1: float
    a2: float
    major_dir: np.ndarray


@dataclass(frozen=True)
class CircleNormal:
    phi: np.ndarray
    r: float


def _check_sym(C) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {C.shape}")
    if not np.isfinite(C).all():
        raise DegenerateEllipse("non-finite covariance")
    if abs(C[0, 1] - C[1, 0]) > 1e-12 * max(1.0, np.abs(C).max()):
        raise ValueError("covariance is not symmetric")
    return C


def contains(e: EllipseCov, p) -> bool:
    """Whether point ``p`` lies in the solid ellipse ``E(mu, C)``."""
    C = _check_sym(e.C)
    det = C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0]
    if det <= 0:
        raise DegenerateEllipse("degenerate ellipse")
    dx, dy = np.asarray(p, dtype=float) - e.mu
    # adjugate form of the inverse; avoids a separate solve
    q = (C[1, 1] * dx * dx - 2 * C[0, 1] * dx * dy + C[0, 0] * dy * dy) / det
    return bool(q <= 4.0)


def eigen2(C) -> AxesSpec:
    """Closed-form eigen-decomposition of a 2x2 SPD matrix.

    ``lambda_1/2 = tr/2 +- sqrt((tr/2)^2 - det)``.  ``major_dir`` is the
    unit eigenvector of ``lambda_1``; for a circle it is ``(1, 0)``.

    Raises
    ------
    DegenerateEllipse
        If ``C`` is not positive definite.
    """
    C = _check_sym(C)
    cxx, cxy, cyy = C[0, 0], C[0, 1], C[1, 1]
    half_tr = 0.5 * (cxx + cyy)
    det = cxx * cyy - cxy * cxy
    if half_tr <= 0 or det <= 0:
        raise DegenerateEllipse("covariance is not positive definite")
    # (tr/2)^2 - det written as a sum of squares so it can't go negative
    disc = np.sqrt((0.5 * (cxx - cyy)) ** 2 + cxy * cxy)
    lam1 = half_tr + disc
    lam2 = det / lam1  # avoids cancellation in half_tr - disc
    if disc == 0:
        v = np.array([1.0, 0.0])
    else:
        # two equivalent eigenvector forms; take the longer for accuracy
        v1 = np.array([lam1 - cyy, cxy])
        v2 = np.array([cxy, lam1 - cxx])
        v = v1 if v1 @ v1 >= v2 @ v2 else v2
        v = v / np.linalg.norm(v)
    return AxesSpec(lam1, lam2, 2.0 * np.sqrt(lam1), 2.0 * np.sqrt(lam2), v)


def orientation(C) -> float:
    """Angle of the major axis in ``[0, pi)``."""
    v = eigen2(C).major_dir
    return float(np.arctan2(v[1], v[0]) % np.pi)


def _clamped_sqrt(x: float, scale: float) -> float:
    if x < 0:
        if x < -_CLAMP_TOL * scale:
            raise DegenerateEllipse("covariance is not an ellipse of a circle")
        return 0.0
    return float(np.sqrt(x))


def circle_normal_from_cov(C) -> tuple[CircleNormal, CircleNormal]:
    """The two circle normals (``phi_z < 0``) whose projection gives ``C``.

    The candidates share ``|phi_x|``, ``|phi_y|`` and ``phi_z = -a2/a1``
    and satisfy ``sign(phi_x phi_y) = -sign(C_xy)``.  When ``C_xy == 0``
    the pair is ``(+|phi_x|, -|phi_y|)`` and ``(-|phi_x|, +|phi_y|)``.
    The first candidate always has ``phi_x >= 0``.
    """
    C = _check_sym(C)
    ax = eigen2(C)
    a1sq = ax.a1 * ax.a1
    px = _clamped_sqrt(a1sq - 4.0 * C[0, 0], a1sq) / ax.a1
    py = _clamped_sqrt(a1sq - 4.0 * C[1, 1], a1sq) / ax.a1
    pz = -ax.a2 / ax.a1
    sy = 1.0 if C[0, 1] < 0 else -1.0
    first = np.array([px, sy * py, pz])
    second = np.array([-px, -sy * py, pz])
    # tidy the tiny norm drift from the two independent square roots
    first /= np.linalg.norm(first)
    second /= np.linalg.norm(second)
    return CircleNormal(first, ax.a1), CircleNormal(second, ax.a1)


def cov_from_normal(phi, r: float) -> np.ndarray:
    """Covariance of the orthogonal projection of a radius-``r`` disk."""
    phi = np.asarray(phi, dtype=float)
    if r <= 0:
        raise ValueError("radius must be positive")
    if abs(phi[2]) < 1e-12:
        raise DegenerateEllipse("degenerate projection")
    fx, fy = phi[0], phi[1]
    return (r * r / 4.0) * np.array(
        [[1.0 - fx * fx, -fx * fy], [-fx * fy, 1.0 - fy * fy]]
    )


def normal_accuracy(theta: float, delta_a2: float, r: float) -> float:
    """Rough angular accuracy of a recovered circle normal.

    ``theta`` is the tilt out of the image plane, ``delta_a2`` the
    uncertainty of the minor semi-axis.  Tilted views give
    ``|da2| / (r sin theta)``, near-frontal views ``sqrt(2 |da2| / r)``;
    the switch happens where the two agree, so the result is continuous
    and equals the smaller of the two.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    da = abs(delta_a2)
    frontal = np.sqrt(2.0 * da / r)
    theta_cross = np.arcsin(min(1.0, np.sqrt(da / (2.0 * r))))
    if theta >= theta_cross and np.sin(theta) > 0:
        return float(da / (r * np.sin(theta)))
    return float(frontal)


def splice_angle(delta_a2: float, r: float) -> float:
    """Tilt at which the frontal and tilted accuracy estimates agree."""
    return float(np.arcsin(min(1.0, np.sqrt(abs(delta_a2) / (2.0 * r)))))
