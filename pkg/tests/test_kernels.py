"""Both kernel backends against plain-Python oracles."""

from collections import deque
import importlib

import numpy as np
import pytest

from conicpose import _pykernels, kernels


def _backends():
    out = [pytest.param(_pykernels, id="python")]
    try:
        out.append(pytest.param(importlib.import_module("conicpose._kernels"), id="cython"))
    except ImportError:
        out.append(pytest.param(None, id="cython", marks=pytest.mark.skip("extension not built")))
    return out


@pytest.fixture(params=_backends())
def backend(request):
    return request.param


def flood_fill_labels(mask):
    """BFS labelling, numbered by raster order of each component's first pixel."""
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=int)
    n = 0
    for y in range(h):
        for x in range(w):
            if mask[y, x] and not labels[y, x]:
                n += 1
                labels[y, x] = n
                todo = deque([(y, x)])
                while todo:
                    cy, cx = todo.popleft()
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            ny, nx = cy + dy, cx + dx
                            if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not labels[ny, nx]:
                                labels[ny, nx] = n
                                todo.append((ny, nx))
    return labels, n


def line_union_oracle(mask, cy, cx):
    out = mask.copy()
    for y, x in zip(*np.nonzero(mask)):
        dx, dy = int(x) - cx, int(y) - cy
        n = max(abs(dx), abs(dy))
        for k in range(n):
            # round half up of k*d/n, in exact integer arithmetic
            out[cy + (2 * k * dy + n) // (2 * n), cx + (2 * k * dx + n) // (2 * n)] = 1
    return out


def mismatch_oracle(mask, oy, ox, mu, C, y0, y1, x0, x1):
    h, w = mask.shape
    cxx, cxy, cyy = C
    count = 0
    for y in range(y0, y1):
        for x in range(x0, x1):
            dx, dy = x - mu[0], y - mu[1]
            ine = cyy * dx * dx - 2.0 * cxy * dx * dy + cxx * dy * dy <= 4.0 * (cxx * cyy - cxy * cxy)
            inb = 0 <= y - oy < h and 0 <= x - ox < w and bool(mask[y - oy, x - ox])
            count += ine != inb
    return count


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_label_empty(backend):
    labels, n = backend.label8(np.zeros((4, 5), dtype=np.uint8))
    assert n == 0 and not labels.any()


def test_label_diagonal_chain(backend):
    labels, n = backend.label8(np.eye(6, dtype=np.uint8))
    assert n == 1


def test_label_u_shape_merges(backend):
    m = np.zeros((4, 5), dtype=np.uint8)
    m[:, 0] = m[:, 4] = m[3, :] = 1
    labels, n = backend.label8(m)
    assert n == 1 and (labels[m == 1] == 1).all()


@pytest.mark.parametrize("density", [0.2, 0.45, 0.6])
def test_label_matches_flood_fill(backend, rng, density):
    for _ in range(20):
        m = (rng.random((rng.integers(1, 30), rng.integers(1, 30))) < density).astype(np.uint8)
        labels, n = backend.label8(m)
        ref, rn = flood_fill_labels(m)
        assert n == rn
        assert np.array_equal(labels, ref)


def test_star_fill_pass_matches_oracle(backend, rng):
    for _ in range(40):
        h, w = rng.integers(3, 25, size=2)
        m = (rng.random((h, w)) < 0.15).astype(np.uint8)
        cy, cx = int(rng.integers(0, h)), int(rng.integers(0, w))
        assert np.array_equal(backend.star_fill_pass(m, cy, cx), line_union_oracle(m, cy, cx))


def test_star_fill_pass_leaves_input_alone(backend):
    m = np.zeros((5, 5), dtype=np.uint8)
    m[0, 0] = 1
    before = m.copy()
    out = backend.star_fill_pass(m, 2, 2)
    assert np.array_equal(m, before)
    assert out[1, 1] == 1 and out[2, 2] == 1


def test_mismatch_matches_oracle(backend, rng):
    for _ in range(40):
        h, w = rng.integers(2, 20, size=2)
        m = (rng.random((h, w)) < 0.5).astype(np.uint8)
        oy, ox = rng.integers(-5, 5, size=2)
        mu = rng.uniform(-3, 20, size=2)
        A = rng.normal(size=(2, 2)) * 3
        C = A @ A.T + np.eye(2)
        box = sorted(rng.integers(-8, 25, size=2)), sorted(rng.integers(-8, 25, size=2))
        (y0, y1), (x0, x1) = box
        args = (int(oy), int(ox), mu[0], mu[1], C[0, 0], C[0, 1], C[1, 1], int(y0), int(y1), int(x0), int(x1))
        ref = mismatch_oracle(m, int(oy), int(ox), mu, (C[0, 0], C[0, 1], C[1, 1]), y0, y1, x0, x1)
        assert backend.ellipse_mismatch(m, *args) == ref


def test_backends_agree_on_large_input(rng):
    try:
        ck = importlib.import_module("conicpose._kernels")
    except ImportError:
        pytest.skip("extension not built")
    m = (rng.random((300, 400)) < 0.5).astype(np.uint8)
    a, na = ck.label8(m)
    b, nb = _pykernels.label8(m)
    assert na == nb and np.array_equal(a, b)
    sub = np.ascontiguousarray(m[:60, :60])
    assert np.array_equal(ck.star_fill_pass(sub, 30, 31), _pykernels.star_fill_pass(sub, 30, 31))
