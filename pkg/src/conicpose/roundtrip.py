"""Closed-loop checks: render a fixture, detect, estimate, compare."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rot, synth
from .conic import EllipseCov
from .detect import DetectConfig, detect_ellipses, select_wheel_pair
from .pose import align_single, enumerate_candidates

TABLE_TOLERANCES = {"axle": 0.04, "sigma": 0.02, "shift": 5.0}
CAR_TOLERANCES = {"quat": 0.03, "sigma": 0.03, "shift": 10.0}


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: {self.value:.6g} (tol {self.tol:g})"


def default_tolerances(name: str) -> dict:
    return dict(TABLE_TOLERANCES if name == "table" else CAR_TOLERANCES)


def _table(scene, img, cfg, tol):
    found = detect_ellipses(img, cfg)
    if not found:
        return [Check("ellipse detected", 1.0, 0.0)], None
    e = found[0]
    circle = scene.model.circles[0]
    true_axle = scene.pose.matrix @ circle.axle
    cands = [align_single(circle, EllipseCov(e.mu, e.C), b) for b in (0, 1)]
    best = min(cands, key=lambda c: np.abs(c.matrix @ circle.axle - true_axle).max())
    axle_err = float(np.abs(best.matrix @ circle.axle - true_axle).max())
    return [
        Check("axle max component error", axle_err, tol["axle"]),
        Check("sigma relative error", abs(best.sigma / scene.sigma - 1), tol["sigma"]),
        Check("shift error px", float(np.linalg.norm(best.shift - scene.shift)), tol["shift"]),
    ], best


def _car(scene, img, cfg, tol, upright):
    found = detect_ellipses(img, cfg)
    pair = select_wheel_pair(found, img.shape, cfg)
    if pair is None:
        return [Check("wheel pair detected", 1.0, 0.0)], None
    cands = enumerate_candidates(scene.model, pair, upright)
    best = min(cands, key=lambda c: rot.quat_distance(c.rotation, scene.rotation))
    return [
        Check("quaternion max component error", rot.quat_distance(best.rotation, scene.rotation), tol["quat"]),
        Check("sigma relative error", abs(best.sigma / scene.sigma - 1), tol["sigma"]),
        Check("shift error px", float(np.linalg.norm(best.shift - scene.shift)), tol["shift"]),
    ], best


def run_fixture(name: str, cfg: DetectConfig | None = None, tolerances=None, upright=True):
    """Round-trip one named fixture; returns ``(checks, best candidate)``."""
    cfg = cfg or DetectConfig()
    tol = default_tolerances(name)
    tol.update(tolerances or {})
    scene = synth.fixture(name)
    img, _ = synth.render(scene)
    if name == "table":
        return _table(scene, img, cfg, tol)
    return _car(scene, img, cfg, tol, upright)
