"""Command line interface.

Exit codes: 0 success, 1 self-test failure, 2 input error,
3 nothing detected.  Configuration precedence is flags, then the config
file (``--config`` or ``$CONICPOSE_CONFIG``), then built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__, serialize, synth
from .detect import DetectConfig, detect_ellipses, select_wheel_pair
from .pose import PoseError, enumerate_candidates, load_model, rank_candidates
from .raster import PNMError, read_pnm, write_pnm
from .roundtrip import run_fixture

EXIT_OK, EXIT_SELFTEST, EXIT_INPUT, EXIT_NONE = 0, 1, 2, 3

CONFIG_ENV = "CONICPOSE_CONFIG"
_RUN_KEYS = {"format", "upright", "select", "seed", "model", "out", "tolerances"}

# flag dest -> (DetectConfig field, converter from flag units)
_DETECT_FLAGS = {
    "window_frac": ("window_frac", float),
    "threshold_sigmas": ("threshold_sigmas", float),
    "min_blob_px": ("min_blob_px", int),
    "mismatch_max": ("mismatch_max", float),
    "min_area_frac": ("min_area_frac", float),
    "max_area_frac": ("max_area_frac", float),
    "orientation_tol_deg": ("pair_orientation_tol", math.radians),
    "horizontal_tol_deg": ("pair_horizontal_tol", math.radians),
}


class InputError(Exception):
    pass


def load_config(path) -> dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("config must be a JSON object")
    if "format" in doc and doc["format"] != 1:
        raise InputError(f"unsupported config format {doc['format']!r}")
    unknown = set(doc) - set(DetectConfig.field_names()) - _RUN_KEYS
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    return doc


def resolve(args) -> tuple[DetectConfig, dict]:
    """Merge defaults, config file and flags into a detector config and
    the remaining run options."""
    path = args.config or os.environ.get(CONFIG_ENV)
    filecfg = load_config(path) if path else {}
    detect_kw = {k: v for k, v in filecfg.items() if k in DetectConfig.field_names()}
    for dest, (fname, conv) in _DETECT_FLAGS.items():
        val = getattr(args, dest, None)
        if val is not None:
            detect_kw[fname] = conv(val)
    try:
        cfg = DetectConfig(**detect_kw)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad detector config: {exc}") from exc
    run = {k: v for k, v in filecfg.items() if k in _RUN_KEYS}
    for key in ("upright", "select", "seed", "model", "out"):
        val = getattr(args, key, None)
        if val is not None:
            run[key] = val
    return cfg, run


def _emit(text: str, out) -> None:
    if out:
        serialize.write_text(text, out)
    else:
        sys.stdout.write(text)


def _read_image(path):
    try:
        return read_pnm(path)
    except (OSError, PNMError) as exc:
        raise InputError(f"cannot read image {path}: {exc}") from exc


def cmd_detect(args) -> int:
    cfg, run = resolve(args)
    found = detect_ellipses(_read_image(args.image), cfg)
    doc = {"ellipses": [serialize.ellipse_to_dict(e) for e in found]}
    _emit(serialize.dumps(doc), run.get("out"))
    return EXIT_OK


def cmd_wheels(args) -> int:
    cfg, run = resolve(args)
    img = _read_image(args.image)
    pair = select_wheel_pair(detect_ellipses(img, cfg), img.shape, cfg)
    _emit(serialize.dumps({"pair": serialize.pair_to_dict(pair)}), run.get("out"))
    return EXIT_OK


def cmd_pose(args) -> int:
    cfg, run = resolve(args)
    if not run.get("model"):
        raise InputError("--model is required")
    try:
        model = load_model(run["model"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read model {run['model']}: {exc}") from exc
    img = _read_image(args.image)
    pair = select_wheel_pair(detect_ellipses(img, cfg), img.shape, cfg)
    if pair is None:
        print("conicpose: no wheel pair found", file=sys.stderr)
        return EXIT_NONE
    try:
        cands = rank_candidates(enumerate_candidates(model, pair, run.get("upright", True)))
    except PoseError as exc:
        raise InputError(str(exc)) from exc
    sel = run.get("select")
    if sel is not None:
        if not 0 <= sel < len(cands):
            raise InputError(f"--select {sel} out of range (0..{len(cands) - 1})")
        cands = [cands[sel]]
    doc = {"candidates": [serialize.candidate_to_dict(c) for c in cands]}
    _emit(serialize.dumps(doc), run.get("out"))
    return EXIT_OK


def cmd_synth(args) -> int:
    _, run = resolve(args)
    if args.fixture:
        try:
            scene = synth.fixture(args.fixture)
        except KeyError as exc:
            raise InputError(str(exc)) from exc
    elif args.scene:
        try:
            with open(args.scene) as f:
                scene = serialize.scene_from_dict(json.load(f))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"cannot read scene {args.scene}: {exc}") from exc
    else:
        raise InputError("give a scene JSON file or --fixture")
    if run.get("seed") is not None:
        scene.seed = int(run["seed"])
    out = run.get("out")
    if not out:
        raise InputError("--out is required")
    img, gt = synth.render(scene)
    truth = args.truth or os.path.splitext(out)[0] + ".json"
    write_pnm(img, out)
    serialize.write_text(serialize.dumps(serialize.truth_to_dict(gt)), truth)
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    cfg, run = resolve(args)
    if args.fixture not in synth.FIXTURES:
        raise InputError(f"unknown fixture {args.fixture!r}; known: {', '.join(synth.FIXTURES)}")
    tol = dict(run.get("tolerances") or {})
    for key in ("axle", "quat", "sigma", "shift"):
        val = getattr(args, f"tol_{key}")
        if val is not None:
            tol[key] = val
    checks, _ = run_fixture(args.fixture, cfg, tol, run.get("upright", True))
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    print(f"{args.fixture}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON config file (default ${CONFIG_ENV})")
    common.add_argument("--out", help="output path (default stdout)")
    g = common.add_argument_group("detector")
    g.add_argument("--window-frac", type=float)
    g.add_argument("--threshold-sigmas", type=float)
    g.add_argument("--min-blob-px", type=int)
    g.add_argument("--mismatch-max", type=float)
    g.add_argument("--min-area-frac", type=float)
    g.add_argument("--max-area-frac", type=float)
    g.add_argument("--orientation-tol-deg", type=float)
    g.add_argument("--horizontal-tol-deg", type=float)

    upright = argparse.ArgumentParser(add_help=False)
    upright.add_argument("--upright", dest="upright", action="store_true", default=None)
    upright.add_argument("--no-upright", dest="upright", action="store_false")

    p = argparse.ArgumentParser(prog="conicpose", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("detect", parents=[common], help="list bright ellipses")
    s.add_argument("image")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("wheels", parents=[common], help="select the wheel pair")
    s.add_argument("image")
    s.set_defaults(func=cmd_wheels)

    s = sub.add_parser("pose", parents=[common, upright], help="pose candidates from a wheel pair")
    s.add_argument("image")
    s.add_argument("--model")
    s.add_argument("--select", type=int, help="emit only the N-th ranked candidate")
    s.set_defaults(func=cmd_pose)

    s = sub.add_parser("synth", parents=[common], help="render a scene with ground truth")
    s.add_argument("scene", nargs="?")
    s.add_argument("--fixture", choices=synth.FIXTURES)
    s.add_argument("--truth", help="ground-truth JSON path (default: --out with .json)")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("roundtrip", parents=[common, upright], help="render, detect, estimate, compare")
    s.add_argument("fixture")
    for key in ("axle", "quat", "sigma", "shift"):
        s.add_argument(f"--tol-{key}", type=float)
    s.set_defaults(func=cmd_roundtrip)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError, ValueError) as exc:
        print(f"conicpose: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
