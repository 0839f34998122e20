"""Similarity pose from circle <-> ellipse correspondences.

The camera model is ``x' = sigma Q x + q`` with ``Q`` the first two rows
of a rotation.  One circle fixes the rotation up to a spin ``beta`` about
the recovered normal; the centre of a second, coplanar-axled circle
(the front wheel) fixes ``beta`` and the scale.

Axle convention: a circle's axle is its outward face normal.  The image
frame has x right, y down and z into the image, so a circle facing the
camera has an axle with negative z after rotation, matching the
``phi_z < 0`` normals returned by :func:`conic.circle_normal_from_cov`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rot
from .conic import EllipseCov, circle_normal_from_cov, eigen2

FORMAT_VERSION = 1
ROLES = ("back-left", "front-left", "back-right", "front-right", "generic")
SIDES = ("left", "right")


class PoseError(ValueError):
    pass


@dataclass(frozen=True)
class CircleSpec:
    center: np.ndarray
    axle: np.ndarray
    radius: float
    role: str = "generic"
    id: str = ""

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(3)
        axle = np.asarray(self.axle, dtype=float).reshape(3)
        n = np.linalg.norm(axle)
        if not n > 0:
            raise ValueError("zero axle")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "axle", axle / n)


@dataclass(frozen=True)
class CircleModel:
    """Named circle features of an object.

    ``up`` is the model's vertical direction; it decides which side of a
    vehicle is upright.  ``unit_scale`` is informational (model units in
    metres).
    """

    name: str
    circles: tuple
    up: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    unit_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "circles", tuple(self.circles))
        up = np.asarray(self.up, dtype=float).reshape(3)
        object.__setattr__(self, "up", up / np.linalg.norm(up))

    def by_role(self, role: str) -> CircleSpec:
        for c in self.circles:
            if c.role == role:
                return c
        raise PoseError(f"model {self.name!r} has no {role} circle")

    def wheels(self, side: str):
        """``(back, front)`` wheel circles of one side."""
        return self.by_role(f"back-{side}"), self.by_role(f"front-{side}")

    def validate_vehicle(self, tol: float = 1e-6) -> None:
        for side in SIDES:
            back, front = self.wheels(side)
            if np.linalg.norm(np.cross(back.axle, front.axle)) > tol:
                raise PoseError(f"{side} wheel axles are not parallel")


def model_from_dict(d: dict) -> CircleModel:
    if d.get("format", FORMAT_VERSION) != FORMAT_VERSION:
        raise PoseError(f"unsupported model format {d.get('format')!r}")
    unknown = set(d) - {"format", "name", "unit_scale", "up", "circles"}
    if unknown:
        raise PoseError(f"unknown model keys: {sorted(unknown)}")
    circles = []
    for c in d["circles"]:
        extra = set(c) - {"id", "role", "center", "axle", "radius"}
        if extra:
            raise PoseError(f"unknown circle keys: {sorted(extra)}")
        circles.append(
            CircleSpec(
                c["center"], c["axle"], float(c["radius"]),
                c.get("role", "generic"), str(c.get("id", "")),
            )
        )
    return CircleModel(
        d.get("name", ""), circles, d.get("up", [0.0, 0.0, 1.0]),
        float(d.get("unit_scale", 1.0)),
    )


def model_to_dict(model: CircleModel) -> dict:
    return {
        "format": FORMAT_VERSION,
        "name": model.name,
        "unit_scale": model.unit_scale,
        "up": model.up.tolist(),
        "circles": [
            {
                "id": c.id,
                "role": c.role,
                "center": c.center.tolist(),
                "axle": c.axle.tolist(),
                "radius": c.radius,
            }
            for c in model.circles
        ],
    }


def load_model(path) -> CircleModel:
    with open(path) as f:
        return model_from_dict(json.load(f))


@dataclass
class PoseCandidate:
    """One similarity transform plus the ambiguity branch that produced it.

    ``normal_sign`` indexes the back-wheel normal candidate, ``wheel_order``
    is 0 when the pair's ``back`` ellipse is taken as the back wheel, and
    ``side`` names the model wheels used.
    """

    rotation: np.ndarray
    sigma: float
    shift: np.ndarray
    normal_sign: int = 0
    wheel_order: int = 0
    side: str = "left"
    consistency: dict = field(default_factory=dict)

    @property
    def matrix(self) -> np.ndarray:
        return rot.quat_to_matrix(self.rotation)

    @property
    def Q(self) -> np.ndarray:
        return self.matrix[:2]

    @property
    def flags(self) -> dict:
        return {
            "normal_sign": self.normal_sign,
            "wheel_order": self.wheel_order,
            "side": self.side,
        }

    def branch_key(self):
        return (self.normal_sign, self.wheel_order, SIDES.index(self.side))


def project_point(p: PoseCandidate, x) -> np.ndarray:
    return p.sigma * (p.Q @ np.asarray(x, dtype=float)) + p.shift


def project_circle(p: PoseCandidate, circle: CircleSpec) -> EllipseCov:
    """Image ellipse of ``circle`` under pose ``p`` (any facing)."""
    normal = p.matrix @ circle.axle
    fx, fy = normal[0], normal[1]
    r = p.sigma * circle.radius
    C = (r * r / 4.0) * np.array([[1 - fx * fx, -fx * fy], [-fx * fy, 1 - fy * fy]])
    return EllipseCov(project_point(p, circle.center), C)


def _normal(C, branch: int) -> np.ndarray:
    if branch not in (0, 1):
        raise ValueError("normal branch must be 0 or 1")
    return circle_normal_from_cov(C)[branch].phi


def align_single(circle: CircleSpec, e: EllipseCov, normal_branch: int = 0, beta: float = 0.0) -> PoseCandidate:
    """Pose mapping ``circle`` onto ellipse ``e``, spun by ``beta``."""
    phi = _normal(e.C, normal_branch)
    a1 = eigen2(e.C).a1
    q1 = rot.quat_between(circle.axle, phi)
    q2 = rot.quat_axis_angle(phi, beta)
    q = rot.compose(q2, q1)
    sigma = a1 / circle.radius
    Q = rot.quat_to_matrix(q)[:2]
    shift = e.mu - sigma * (Q @ circle.center)
    return PoseCandidate(q, sigma, shift, normal_sign=normal_branch)


def two_wheel_beta(delta, Delta, phi):
    """Spin about ``phi`` turning ``Delta`` towards ``delta``.

    Returns ``(beta, cos_beta, sin_beta)`` with the raw (un-normalized)
    cosine/sine ratios.  The sine uses ``det(Delta, delta, phi)``, the
    orientation under which a positive angle about ``phi`` carries
    ``Delta`` onto ``delta`` with the quaternion matrix used here.
    """
    nd = np.linalg.norm(delta) * np.linalg.norm(Delta)
    cos_b = float(delta @ Delta) / nd
    sin_b = float(np.linalg.det(np.column_stack([Delta, delta, phi]))) / nd
    return math.atan2(sin_b, cos_b), cos_b, sin_b


def lift_image_vector(d2, phi) -> np.ndarray:
    """3-D vector with image components ``d2`` orthogonal to ``phi``."""
    if abs(phi[2]) < 1e-6:
        raise PoseError("edge-on wheel")
    dx, dy = float(d2[0]), float(d2[1])
    return np.array([dx, dy, -(dx * phi[0] + dy * phi[1]) / phi[2]])


def align_two_wheels(
    back_circle: CircleSpec,
    front_circle: CircleSpec,
    back: EllipseCov,
    front_mu,
    normal_branch: int = 0,
) -> PoseCandidate:
    """Pose from the back wheel's ellipse and the front wheel's centre.

    Scale is ``|delta| / |Delta|`` (image vs model wheelbase, both in
    3-D); ``beta`` aligns the rotated model wheelbase with the image one.
    """
    phi = _normal(back.C, normal_branch)
    q1 = rot.quat_between(back_circle.axle, phi)
    Delta = rot.rotate(q1, front_circle.center - back_circle.center)
    delta = lift_image_vector(np.asarray(front_mu, dtype=float) - back.mu, phi)
    if np.linalg.norm(Delta) == 0 or np.linalg.norm(delta) == 0:
        raise PoseError("coincident wheel centers")
    beta, cos_b, sin_b = two_wheel_beta(delta, Delta, phi)
    q = rot.compose(rot.quat_axis_angle(phi, beta), q1)
    sigma = float(np.linalg.norm(delta) / np.linalg.norm(Delta))
    Q = rot.quat_to_matrix(q)[:2]
    shift = back.mu - sigma * (Q @ back_circle.center)
    cand = PoseCandidate(q, sigma, shift, normal_sign=normal_branch)
    cand.consistency["trig_defect"] = abs(cos_b * cos_b + sin_b * sin_b - 1.0)
    return cand


def _ordered(pair, wheel_order):
    back, front = pair.back, pair.front
    if wheel_order:
        back, front = front, back
    return EllipseCov(back.mu, back.C), EllipseCov(front.mu, front.C)


def consistency_checks(candidate: PoseCandidate, pair, model: CircleModel) -> dict:
    """Residuals that a correct candidate should drive to zero.

    ``radius_ratio_error`` compares the imaged front-wheel radius with the
    model radius under the candidate's scale.  ``coplanarity_residual`` is
    ``|det(delta_hat, phi, phi')|`` for the back normal ``phi`` and the
    front normal ``phi'`` (the candidate closer to the predicted front
    axle).
    """
    back_e, front_e = _ordered(pair, candidate.wheel_order)
    _, front_c = model.wheels(candidate.side)
    phi = _normal(back_e.C, candidate.normal_sign)
    front_ax = eigen2(front_e.C)
    radius_err = abs(front_ax.a1 / (candidate.sigma * front_c.radius) - 1.0)
    predicted = candidate.matrix @ front_c.axle
    opts = [n.phi for n in circle_normal_from_cov(front_e.C)]
    phi_f = min(opts, key=lambda v: np.linalg.norm(v - predicted))
    delta = lift_image_vector(front_e.mu - back_e.mu, phi)
    dhat = delta / np.linalg.norm(delta)
    coplanar = abs(float(np.linalg.det(np.column_stack([dhat, phi, phi_f]))))
    report = dict(candidate.consistency)
    report.update(radius_ratio_error=radius_err, coplanarity_residual=coplanar)
    return report


def _up_image_y(cand: PoseCandidate, model: CircleModel) -> float:
    return float((cand.matrix @ model.up)[1])


def enumerate_candidates(model: CircleModel, pair, upright: bool = True) -> list[PoseCandidate]:
    """All discrete pose hypotheses for a detected wheel pair.

    Branches: back-wheel normal sign x which ellipse is the back wheel x
    which side of the model the wheels are on.  With ``upright``, only the
    side whose model ``up`` points up the image (negative y) is kept for
    each (normal, order) combination, leaving 4 of 8.
    """
    out = []
    for normal_sign, wheel_order in itertools.product((0, 1), (0, 1)):
        back_e, front_e = _ordered(pair, wheel_order)
        by_side = []
        for side in SIDES:
            back_c, front_c = model.wheels(side)
            cand = align_two_wheels(back_c, front_c, back_e, front_e.mu, normal_sign)
            cand.wheel_order = wheel_order
            cand.side = side
            cand.consistency = consistency_checks(cand, pair, model)
            by_side.append(cand)
        if upright:
            # the two sides differ by a half turn about the wheelbase, so
            # their up vectors are opposite; keep the one pointing up
            by_side = [min(by_side, key=lambda c: _up_image_y(c, model))]
        out.extend(by_side)
    out.sort(key=PoseCandidate.branch_key)
    return out


def rank_candidates(cands) -> list[PoseCandidate]:
    """Order by summed consistency residuals, best first (stable)."""
    def score(c):
        r = c.consistency
        return r.get("radius_ratio_error", 0.0) + r.get("coplanarity_residual", 0.0)

    return sorted(cands, key=score)
