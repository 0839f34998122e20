"""JSON documents read and written by the command line tool.

Every document is an object carrying ``"format": 1``; documents with any
other version are rejected.  Floats are written with 9 significant
digits so outputs diff cleanly.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .pose import FORMAT_VERSION, model_from_dict, model_to_dict
from .synth import GroundTruth, SceneSpec


class FormatError(ValueError):
    pass


def _round(obj):
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        x = float(f"{x:.9g}")
        return 0.0 if x == 0 else x
    return obj


def dumps(doc: dict) -> str:
    return json.dumps({"format": FORMAT_VERSION, **_round(doc)}, indent=2) + "\n"


def check_format(doc, what="document") -> dict:
    if not isinstance(doc, dict):
        raise FormatError(f"{what} must be a JSON object")
    if doc.get("format") != FORMAT_VERSION:
        raise FormatError(f"unsupported {what} format {doc.get('format')!r}")
    return doc


def write_text(text: str, path) -> None:
    """Write atomically: the target appears only once fully written."""
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def ellipse_to_dict(e) -> dict:
    return {
        "mu": e.mu,
        "cov": e.C,
        "a1": e.a1,
        "a2": e.a2,
        "orientation": e.orientation,
        "mismatch": e.mismatch_ratio,
        "area": e.area,
    }


def pair_to_dict(pair):
    if pair is None:
        return None
    return {"back": ellipse_to_dict(pair.back), "front": ellipse_to_dict(pair.front)}


def candidate_to_dict(c) -> dict:
    return {
        "quat": c.rotation,
        "sigma": c.sigma,
        "shift": c.shift,
        "flags": c.flags,
        "consistency": {
            "radius_ratio_error": c.consistency.get("radius_ratio_error"),
            "coplanarity_residual": c.consistency.get("coplanarity_residual"),
        },
    }


def truth_to_dict(gt: GroundTruth) -> dict:
    s = gt.scene
    return {
        "scene": scene_to_dict(s),
        "circles": [
            {
                "id": c.id,
                "role": c.role,
                "mu": c.mu,
                "cov": c.C,
                "a1": c.a1,
                "a2": c.a2,
                "phi": c.phi,
                "normals": [n for n in c.normals],
                "visible": c.visible,
            }
            for c in gt.circles
        ],
    }


_SCENE_KEYS = {
    "format", "model", "rotation", "sigma", "shift", "width", "height",
    "foreground", "background", "noise_std", "occluders", "seed", "supersample",
}


def scene_to_dict(s: SceneSpec) -> dict:
    d = model_to_dict(s.model)
    d.pop("format")
    return {
        "model": d,
        "rotation": s.rotation,
        "sigma": s.sigma,
        "shift": s.shift,
        "width": s.width,
        "height": s.height,
        "foreground": s.foreground,
        "background": s.background,
        "noise_std": s.noise_std,
        "occluders": [list(o) for o in s.occluders],
        "seed": s.seed,
        "supersample": s.supersample,
    }


def scene_from_dict(d: dict) -> SceneSpec:
    check_format(d, "scene")
    unknown = set(d) - _SCENE_KEYS
    if unknown:
        raise FormatError(f"unknown scene keys: {sorted(unknown)}")
    model = d["model"]
    if isinstance(model, str):
        with open(model) as f:
            model = json.load(f)
    kw = {k: d[k] for k in _SCENE_KEYS - {"format", "model"} if k in d}
    if "occluders" in kw:
        kw["occluders"] = [tuple(int(v) for v in o) for o in kw["occluders"]]
    return SceneSpec(model=model_from_dict(model), **kw)
