"""Pure numpy/scipy versions of the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

_EIGHT = np.ones((3, 3), dtype=bool)


def label8(mask):
    """8-connected labelling; labels 1..n in raster order of first pixel."""
    labels, count = ndimage.label(np.asarray(mask, dtype=bool), structure=_EIGHT)
    return labels.astype(np.int32, copy=False), int(count)


def star_fill_pass(mask, cy, cx):
    mask = np.asarray(mask, dtype=np.uint8)
    out = mask.copy()
    ys, xs = np.nonzero(mask)
    dx = xs.astype(np.int64) - cx
    dy = ys.astype(np.int64) - cy
    n = np.maximum(np.abs(dx), np.abs(dy))
    keep = n > 0
    dx, dy, n = dx[keep], dy[keep], n[keep]
    if n.size == 0:
        return out
    # ragged k = 0..n-1 for every pixel, flattened
    total = int(n.sum())
    starts = np.repeat(np.cumsum(n) - n, n)
    k = np.arange(total, dtype=np.int64) - starts
    rdx = np.repeat(dx, n)
    rdy = np.repeat(dy, n)
    rn = np.repeat(n, n)
    ox = np.floor_divide(2 * k * rdx + rn, 2 * rn)
    oy = np.floor_divide(2 * k * rdy + rn, 2 * rn)
    out[cy + oy, cx + ox] = 1
    return out


def ellipse_mismatch(mask, oy, ox, mux, muy, cxx, cxy, cyy, y0, y1, x0, x1):
    mask = np.asarray(mask, dtype=np.uint8)
    h, w = mask.shape
    ys = np.arange(y0, y1)
    xs = np.arange(x0, x1)
    dy = (ys - muy)[:, None]
    dx = (xs - mux)[None, :]
    qf = cyy * dx * dx - 2.0 * cxy * dx * dy + cxx * dy * dy
    inside_e = qf <= 4.0 * (cxx * cyy - cxy * cxy)
    inside_b = np.zeros_like(inside_e)
    ly0, ly1 = max(y0, oy), min(y1, oy + h)
    lx0, lx1 = max(x0, ox), min(x1, ox + w)
    if ly0 < ly1 and lx0 < lx1:
        inside_b[ly0 - y0 : ly1 - y0, lx0 - x0 : lx1 - x0] = (
            mask[ly0 - oy : ly1 - oy, lx0 - ox : lx1 - ox] != 0
        )
    return int(np.count_nonzero(inside_b != inside_e))
