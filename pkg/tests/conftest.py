import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, n=None):
    v = rng.normal(size=(3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def draw_ellipses(shape, ellipses, value=1.0):
    """Point-sampled filled ellipses given as ``(cx, cy, a, b, angle)``,
    with semi-axes ``a``, ``b``; written independently of the library."""
    img = np.zeros(shape)
    ys, xs = np.mgrid[: shape[0], : shape[1]]
    for cx, cy, a, b, ang in ellipses:
        c, s = np.cos(ang), np.sin(ang)
        u = (xs - cx) * c + (ys - cy) * s
        v = -(xs - cx) * s + (ys - cy) * c
        img[(u / a) ** 2 + (v / b) ** 2 <= 1.0] = value
    return img


def analytic_pair(scene, model=None):
    """Exact wheel pair of the camera-facing side, built without rendering."""
    from conicpose.conic import eigen2, orientation
    from conicpose.detect import DetectedEllipse, WheelPair
    from conicpose.pose import project_circle

    model = model or scene.model
    pose = scene.pose
    for side in ("left", "right"):
        back, front = scene.model.wheels(side)
        if (pose.matrix @ back.axle)[2] < 0:
            break
    ells = []
    for i, c in enumerate((back, front)):
        e = project_circle(pose, c)
        ax = eigen2(e.C)
        ells.append(DetectedEllipse(i + 1, e.mu, e.C, ax.a1, ax.a2, orientation(e.C), 0.0, 0))
    ells.sort(key=lambda e: tuple(e.mu))
    return WheelPair(*ells), side


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
