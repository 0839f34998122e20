"""Synthetic scenes with exact ground truth.

Only the circle features of a model are drawn, as flat bright ellipses
on a dark background.  Ground truth comes from projecting the circles
analytically, so detector output can be compared with exact values.

Noise is i.i.d. Gaussian from ``numpy.random.default_rng(seed)`` (PCG64),
drawn as one ``(h, w)`` array after rasterization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rot
from .conic import circle_normal_from_cov, eigen2
from .pose import CircleModel, CircleSpec, PoseCandidate, project_circle


@dataclass
class SceneSpec:
    model: CircleModel
    rotation: np.ndarray
    sigma: float
    shift: np.ndarray
    width: int = 800
    height: int = 600
    foreground: float = 1.0
    background: float = 0.0
    noise_std: float = 0.0
    occluders: list = field(default_factory=list)  # (x0, y0, x1, y1), half-open
    seed: int = 0
    supersample: int = 1

    def __post_init__(self):
        self.rotation = rot.normalize(self.rotation)
        self.shift = np.asarray(self.shift, dtype=float).reshape(2)
        if not self.foreground > self.background:
            raise ValueError("foreground must be brighter than background")
        if self.supersample < 1:
            raise ValueError("supersample must be >= 1")

    @property
    def pose(self) -> PoseCandidate:
        return PoseCandidate(self.rotation, float(self.sigma), self.shift)


@dataclass(frozen=True)
class CircleTruth:
    id: str
    role: str
    mu: np.ndarray
    C: np.ndarray
    a1: float
    a2: float
    phi: np.ndarray  # rotated axle
    normals: tuple  # both phi_z < 0 candidates recoverable from C
    visible: bool


@dataclass(frozen=True)
class GroundTruth:
    scene: SceneSpec
    circles: tuple

    def visible(self):
        return [c for c in self.circles if c.visible]

    def by_role(self, role):
        for c in self.circles:
            if c.role == role:
                return c
        raise KeyError(role)


def _circle_truth(scene: SceneSpec, circle: CircleSpec) -> CircleTruth:
    pose = scene.pose
    e = project_circle(pose, circle)
    phi = pose.matrix @ circle.axle
    facing = phi[2] < -1e-9
    if facing:
        ax = eigen2(e.C)
        a1, a2 = ax.a1, ax.a2
        normals = tuple(n.phi for n in circle_normal_from_cov(e.C))
        hx, hy = 2 * np.sqrt(e.C[0, 0]), 2 * np.sqrt(e.C[1, 1])
        inside = (
            e.mu[0] - hx >= -0.5
            and e.mu[0] + hx <= scene.width - 0.5
            and e.mu[1] - hy >= -0.5
            and e.mu[1] + hy <= scene.height - 0.5
        )
    else:
        a1 = scene.sigma * circle.radius
        a2 = a1 * abs(phi[2])
        normals, inside = (), False
    return CircleTruth(
        circle.id, circle.role, e.mu, e.C, a1, a2, phi, normals, bool(facing and inside)
    )


def _rasterize(mask, mu, C, supersample):
    """Accumulate the coverage of ``E(mu, C)`` into ``mask`` (max-combine)."""
    h, w = mask.shape
    hx, hy = 2 * np.sqrt(C[0, 0]), 2 * np.sqrt(C[1, 1])
    x0 = max(0, int(np.floor(mu[0] - hx)))
    x1 = min(w, int(np.ceil(mu[0] + hx)) + 1)
    y0 = max(0, int(np.floor(mu[1] - hy)))
    y1 = min(h, int(np.ceil(mu[1] + hy)) + 1)
    if x0 >= x1 or y0 >= y1:
        return
    s = supersample
    offs = (np.arange(s) + 0.5) / s - 0.5
    ys = (np.arange(y0, y1)[:, None] + offs[None, :]).ravel()
    xs = (np.arange(x0, x1)[:, None] + offs[None, :]).ravel()
    dy = (ys - mu[1])[:, None]
    dx = (xs - mu[0])[None, :]
    cxx, cxy, cyy = C[0, 0], C[0, 1], C[1, 1]
    # same test, same operation order, as the detector's mismatch kernel
    inside = cyy * dx * dx - 2.0 * cxy * dx * dy + cxx * dy * dy <= 4.0 * (cxx * cyy - cxy * cxy)
    cov = inside.reshape(y1 - y0, s, x1 - x0, s).mean(axis=(1, 3))
    np.maximum(mask[y0:y1, x0:x1], cov, out=mask[y0:y1, x0:x1])


def render(scene: SceneSpec):
    """Rasterize the scene; returns ``(gray image, GroundTruth)``.

    A pixel is foreground where its centre lies in a visible ellipse (with
    ``supersample > 1``, the covered fraction of an s x s sub-grid).
    """
    truths = tuple(_circle_truth(scene, c) for c in scene.model.circles)
    coverage = np.zeros((scene.height, scene.width))
    for t in truths:
        if t.visible:
            _rasterize(coverage, t.mu, t.C, scene.supersample)
    img = scene.background + (scene.foreground - scene.background) * coverage
    if scene.noise_std > 0:
        rng = np.random.default_rng(scene.seed)
        img = img + rng.normal(0.0, scene.noise_std, img.shape)
    img = np.clip(img, 0.0, 1.0)
    for x0, y0, x1, y1 in scene.occluders:
        img[max(0, y0):max(0, y1), max(0, x0):max(0, x1)] = scene.background
    return img, GroundTruth(scene, truths)


# -- fixtures ------------------------------------------------------------------

TABLE_AXLE = (0.7568, 0.3243, -0.5676)

# (vehicle, quaternion a b c d, sigma, shift)
CAR_ROWS = {
    "golf-1": ("golf", (-0.2162, -0.2162, -0.6053, 0.7350), 60.0, (400.0, 300.0)),
    "golf-2": ("golf", (-0.4417, -0.5522, 0.5522, -0.4417), 50.0, (380.0, 330.0)),
    "audi-1": ("audi", (0.9701, 0.0, 0.2425, 0.0), 150.0, (400.0, 300.0)),
    "audi-2": ("audi", (0.9701, 0.0, -0.2425, 0.0), 150.0, (400.0, 300.0)),
    "bmw-1": ("bmw", (0.0948, 0.1896, -0.9481, 0.2370), 100.0, (400.0, 300.0)),
    "bmw-2": ("bmw", (0.8729, -0.2182, 0.4364, 0.0), 100.0, (400.0, 300.0)),
}

# wheelbase, track, wheel radius (metres); model frames differ per vehicle:
# golf is (right, forward, up), audi/bmw are (forward, down, left)
_VEHICLES = {
    "golf": (2.58, 1.50, 0.35, "rfu"),
    "audi": (2.84, 1.60, 0.33, "fdl"),
    "bmw": (2.73, 1.50, 0.33, "fdl"),
}


def vehicle_model(name: str) -> CircleModel:
    """Four-wheel circle model; axles are outward wheel-face normals."""
    if name not in _VEHICLES:
        raise KeyError(f"unknown vehicle {name!r}")
    wheelbase, track, radius, frame = _VEHICLES[name]
    if frame == "rfu":
        fwd, left = np.array([0.0, 1.0, 0.0]), np.array([-1.0, 0.0, 0.0])
        up = np.array([0.0, 0.0, 1.0])
    else:
        fwd, left = np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])
        up = np.array([0.0, -1.0, 0.0])
    circles = []
    for side, sgn in (("left", 1.0), ("right", -1.0)):
        for end, fsgn in (("back", -1.0), ("front", 1.0)):
            circles.append(
                CircleSpec(
                    fsgn * wheelbase / 2 * fwd + sgn * track / 2 * left,
                    sgn * left,
                    radius,
                    f"{end}-{side}",
                    f"{end}-{side}",
                )
            )
    return CircleModel(name, circles, up, 1.0)


def table_model() -> CircleModel:
    # top of radius 10 units at height 7.5 on the table's axis, so the
    # projected centre does not depend on the spin about the axle
    return CircleModel("table", [CircleSpec([0, 0, 7.5], [0, 0, 1], 10.0, "generic", "top")])


def table_fixture() -> SceneSpec:
    axle = np.asarray(TABLE_AXLE) / np.linalg.norm(TABLE_AXLE)
    q = rot.quat_between([0.0, 0.0, 1.0], axle)
    return SceneSpec(table_model(), q, 6.0, (400.0, 340.0))


def car_fixture(row: str) -> SceneSpec:
    if row not in CAR_ROWS:
        raise KeyError(f"unknown fixture row {row!r}; known: {sorted(CAR_ROWS)}")
    vehicle, q, sigma, shift = CAR_ROWS[row]
    return SceneSpec(vehicle_model(vehicle), q, sigma, shift)


def fixture(name: str) -> SceneSpec:
    if name == "table":
        return table_fixture()
    return car_fixture(name)


FIXTURES = ("table",) + tuple(CAR_ROWS)
