"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on inputs shaped like the detector's real workload; the
last row times the whole detection pipeline on a rendered vehicle scene
with each backend swapped in.
"""

import argparse
import importlib
import timeit

import numpy as np

from conicpose import _pykernels, detect, kernels, synth


def _inputs():
    rng = np.random.default_rng(0)
    noise = (rng.random((600, 800)) < 0.45).astype(np.uint8)
    ys, xs = np.mgrid[:201, :201]
    r2 = (xs - 100) ** 2 + (ys - 100) ** 2
    ring = ((r2 <= 100**2) & (r2 >= 70**2)).astype(np.uint8)
    blob = np.ascontiguousarray(ring)
    mismatch_args = (0, 0, 100.0, 100.0, 2500.0, 0.0, 2500.0, -2, 203, -2, 203)
    img, _ = synth.render(synth.car_fixture("bmw-1"))
    return noise, ring, blob, mismatch_args, img


def _with_backend(mod, fn):
    saved = {k: getattr(kernels, k) for k in ("label8", "star_fill_pass", "ellipse_mismatch")}
    for k in saved:
        setattr(kernels, k, getattr(mod, k))
    try:
        return fn()
    finally:
        for k, v in saved.items():
            setattr(kernels, k, v)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        compiled = importlib.import_module("conicpose._kernels")
    except ImportError:
        print("compiled extension not built; only the numpy backend is available")
        compiled = None
    noise, ring, blob, margs, img = _inputs()
    cases = [
        ("label8 800x600 noise", lambda m: m.label8(noise)),
        ("star_fill_pass ring r=100", lambda m: m.star_fill_pass(ring, 100, 100)),
        ("ellipse_mismatch 205x205", lambda m: m.ellipse_mismatch(blob, *margs)),
        ("detect_ellipses bmw-1", lambda m: _with_backend(m, lambda: detect.detect_ellipses(img))),
    ]
    print(f"{'case':30s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases:
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:30s} {t_py:10.2f} {'-':>10s} {'-':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:30s} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
