import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from conicpose import cli, pose, raster, rot, synth

from conftest import draw_ellipses


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_image(tmp_path, img, name="img.pgm"):
    path = tmp_path / name
    raster.write_pnm(img, path)
    return path


@pytest.fixture
def golf(tmp_path):
    img, gt = synth.render(synth.car_fixture("golf-1"))
    model = tmp_path / "golf.json"
    model.write_text(json.dumps(pose.model_to_dict(synth.vehicle_model("golf"))))
    return write_image(tmp_path, img, "golf.pgm"), model, gt


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    monkeypatch.delenv(cli.CONFIG_ENV, raising=False)


def test_detect_three(tmp_path, capsys):
    img = draw_ellipses((600, 800), [(150, 150, 60, 35, 0.3), (420, 200, 45, 45, 0), (620, 420, 70, 30, 1.2)])
    code, out, _ = run(["detect", write_image(tmp_path, img)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["format"] == 1
    assert len(doc["ellipses"]) == 3
    assert set(doc["ellipses"][0]) == {"mu", "cov", "a1", "a2", "orientation", "mismatch", "area"}


def test_detect_black(tmp_path, capsys):
    code, out, _ = run(["detect", write_image(tmp_path, np.zeros((50, 50)))], capsys)
    assert code == 0 and json.loads(out)["ellipses"] == []


def test_detect_corrupt_file(tmp_path, capsys):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5\n10 10\n255\n\x00\x01")
    out = tmp_path / "out.json"
    code, _, err = run(["detect", bad, "--out", out], capsys)
    assert code == 2
    assert "truncated" in err
    assert not out.exists()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["bad.pgm"]


def test_detect_missing_file(tmp_path, capsys):
    assert run(["detect", tmp_path / "nope.pgm"], capsys)[0] == 2


def test_detect_writes_out_file(tmp_path, capsys):
    img = draw_ellipses((200, 200), [(100, 100, 40, 30, 0)])
    out = tmp_path / "d.json"
    code, stdout, _ = run(["detect", write_image(tmp_path, img), "--out", out], capsys)
    assert code == 0 and stdout == ""
    assert len(json.loads(out.read_text())["ellipses"]) == 1


def test_wheels_car(golf, capsys):
    image, _, gt = golf
    code, out, _ = run(["wheels", image], capsys)
    pair = json.loads(out)["pair"]
    assert code == 0
    truth = sorted((c.mu for c in gt.visible()), key=lambda m: m[0])
    assert np.linalg.norm(np.array(pair["back"]["mu"]) - truth[0]) < 1
    assert np.linalg.norm(np.array(pair["front"]["mu"]) - truth[1]) < 1


def test_wheels_one_wheel(tmp_path, capsys):
    img = draw_ellipses((600, 800), [(400, 300, 50, 40, 0)])
    code, out, _ = run(["wheels", write_image(tmp_path, img)], capsys)
    assert code == 0 and json.loads(out)["pair"] is None


def test_wheels_decoy(tmp_path, capsys):
    img = draw_ellipses((600, 800), [(250, 400, 50, 40, 1.5), (560, 405, 50, 41, 1.5), (80, 80, 30, 30, 0)])
    img[80:84, 108:114] = 1.0
    code, out, _ = run(["wheels", write_image(tmp_path, img)], capsys)
    pair = json.loads(out)["pair"]
    xs = sorted([pair["back"]["mu"][0], pair["front"]["mu"][0]])
    assert xs == pytest.approx([250, 560], abs=1)


def test_pose_candidates(golf, capsys):
    image, model, _ = golf
    code, out, _ = run(["pose", image, "--model", model], capsys)
    cands = json.loads(out)["candidates"]
    assert code == 0 and len(cands) == 4
    truth = synth.car_fixture("golf-1").rotation
    assert min(rot.quat_distance(c["quat"], truth) for c in cands) < 0.03
    for c in cands:
        assert c["quat"][0] >= 0
        assert set(c["flags"]) == {"normal_sign", "wheel_order", "side"}
        assert set(c["consistency"]) == {"radius_ratio_error", "coplanarity_residual"}
    scores = [c["consistency"]["radius_ratio_error"] + c["consistency"]["coplanarity_residual"] for c in cands]
    assert scores == sorted(scores)


def test_pose_no_upright(golf, capsys):
    image, model, _ = golf
    code, out, _ = run(["pose", image, "--model", model, "--no-upright"], capsys)
    assert code == 0 and len(json.loads(out)["candidates"]) == 8


def test_pose_select(golf, capsys):
    image, model, _ = golf
    _, full, _ = run(["pose", image, "--model", model], capsys)
    code, out, _ = run(["pose", image, "--model", model, "--select", 2], capsys)
    cands = json.loads(out)["candidates"]
    assert code == 0 and len(cands) == 1
    assert cands[0] == json.loads(full)["candidates"][2]


def test_pose_select_out_of_range(golf, capsys):
    image, model, _ = golf
    assert run(["pose", image, "--model", model, "--select", 4], capsys)[0] == 2


def test_pose_no_pair(tmp_path, golf, capsys):
    _, model, _ = golf
    code, out, err = run(["pose", write_image(tmp_path, np.zeros((60, 80))), "--model", model], capsys)
    assert code == 3 and out == "" and "no wheel pair" in err


def test_pose_needs_model(golf, capsys):
    assert run(["pose", golf[0]], capsys)[0] == 2


def test_pose_bad_model(tmp_path, golf, capsys):
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"format": 1, "name": "x", "circles": [], "colour": "red"}))
    assert run(["pose", golf[0], "--model", bad], capsys)[0] == 2


def test_synth_fixture(tmp_path, capsys):
    out = tmp_path / "t.pgm"
    code, _, _ = run(["synth", "--fixture", "table", "--out", out], capsys)
    assert code == 0
    img = raster.read_pnm(out)
    assert img.shape == (600, 800)
    truth = json.loads((tmp_path / "t.json").read_text())
    assert truth["format"] == 1
    assert truth["circles"][0]["visible"] is True
    assert truth["scene"]["sigma"] == 6.0


def test_synth_scene_file_and_seed(tmp_path, capsys):
    from conicpose import serialize

    scene = synth.car_fixture("bmw-1")
    scene.noise_std = 0.1
    spec = tmp_path / "scene.json"
    spec.write_text(serialize.dumps(serialize.scene_to_dict(scene)))
    outs = []
    for seed, name in ((5, "a"), (5, "b"), (6, "c")):
        img = tmp_path / f"{name}.pgm"
        assert run(["synth", spec, "--seed", seed, "--out", img, "--truth", tmp_path / f"{name}-gt.json"], capsys)[0] == 0
        outs.append(img.read_bytes())
    assert outs[0] == outs[1] != outs[2]
    gt = json.loads((tmp_path / "a-gt.json").read_text())
    assert gt["scene"]["seed"] == 5


def test_synth_unknown_fixture(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["synth", "--fixture", "trabant", "--out", str(tmp_path / "x.pgm")])
    assert e.value.code == 2


def test_synth_bad_scene(tmp_path, capsys):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"format": 7}))
    assert run(["synth", spec, "--out", tmp_path / "x.pgm"], capsys)[0] == 2
    assert not (tmp_path / "x.pgm").exists()


@pytest.mark.parametrize("name", ["table", "golf-1"])
def test_roundtrip_passes(name, capsys):
    code, out, _ = run(["roundtrip", name], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 4 and all(l.startswith("PASS") for l in lines[:3])
    assert lines[-1] == f"{name}: PASS"


def test_roundtrip_corrupted_tolerance_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"format": 1, "tolerances": {"quat": 1e-9, "shift": 1e-9}}))
    code, out, _ = run(["roundtrip", "golf-1", "--config", cfg], capsys)
    assert code == 1
    assert out.strip().endswith("golf-1: FAIL")
    assert sum(l.startswith("FAIL") for l in out.splitlines()) == 2


def test_roundtrip_tolerance_flag(capsys):
    assert run(["roundtrip", "table", "--tol-sigma", 0], capsys)[0] == 1


def test_roundtrip_unknown_fixture(capsys):
    code, _, err = run(["roundtrip", "trabant-1"], capsys)
    assert code == 2 and "unknown fixture" in err


def test_config_unknown_key(tmp_path, golf, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"window_fraction": 0.1}))
    code, _, err = run(["detect", golf[0], "--config", cfg], capsys)
    assert code == 2 and "window_fraction" in err


def test_config_future_format(tmp_path, golf, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"format": 2}))
    assert run(["detect", golf[0], "--config", cfg], capsys)[0] == 2


def test_config_from_environment(tmp_path, golf, capsys, monkeypatch):
    cfg = tmp_path / "c.json"
    # an impossible mismatch bound rejects every blob
    cfg.write_text(json.dumps({"mismatch_max": 1e-9}))
    monkeypatch.setenv(cli.CONFIG_ENV, str(cfg))
    _, out, _ = run(["detect", golf[0]], capsys)
    assert json.loads(out)["ellipses"] == []
    # flags beat the config file
    _, out, _ = run(["detect", golf[0], "--mismatch-max", 0.2], capsys)
    assert len(json.loads(out)["ellipses"]) == 2


def test_resolve_precedence_and_units(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"window_frac": 0.2, "threshold_sigmas": 2.0, "upright": False}))
    args = cli.build_parser().parse_args(
        ["pose", "x.pgm", "--config", str(cfg), "--threshold-sigmas", "1.5", "--orientation-tol-deg", "10"]
    )
    det, run_opts = cli.resolve(args)
    assert det.window_frac == 0.2
    assert det.threshold_sigmas == 1.5
    assert det.pair_orientation_tol == pytest.approx(math.radians(10))
    assert det.pair_horizontal_tol == 0.52
    assert run_opts["upright"] is False


def test_bad_flag_value(golf, capsys):
    assert run(["detect", golf[0], "--window-frac", 3], capsys)[0] == 2


def test_outputs_byte_identical(golf, capsys):
    image, model, _ = golf
    a = run(["pose", image, "--model", model, "--no-upright"], capsys)[1]
    b = run(["pose", image, "--model", model, "--no-upright"], capsys)[1]
    assert a == b


def test_console_script(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "conicpose.cli", "roundtrip", "audi-1"],
        capture_output=True, text=True, env={**os.environ, cli.CONFIG_ENV: ""},
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip().endswith("audi-1: PASS")
