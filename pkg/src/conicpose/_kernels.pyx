# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pixel loops for the detection pipeline.

Must stay bit-compatible with ``_pykernels``; the test suite runs both
against the same oracles.
"""

import numpy as np


cdef inline Py_ssize_t _find(int[::1] parent, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t root = i
    while parent[root] != root:
        root = parent[root]
    # path compression
    cdef Py_ssize_t nxt
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = <int>root
        i = nxt
    return root


cdef inline void _union(int[::1] parent, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a < b:
        parent[b] = <int>a
    elif b < a:
        parent[a] = <int>b


def label8(const unsigned char[:, ::1] mask):
    """8-connected labelling; labels 1..n in raster order of first pixel."""
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1]
    cdef Py_ssize_t y, x, nl = 0, cur, nb
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef int[:, ::1] labels = labels_arr
    parent_arr = np.zeros(h * w + 2, dtype=np.int32)
    cdef int[::1] parent = parent_arr
    with nogil:
        for y in range(h):
            for x in range(w):
                if not mask[y, x]:
                    continue
                cur = 0
                # previously visited neighbours: W, NW, N, NE
                if x > 0 and labels[y, x - 1]:
                    cur = labels[y, x - 1]
                if y > 0:
                    if x > 0 and labels[y - 1, x - 1]:
                        nb = labels[y - 1, x - 1]
                        if cur:
                            _union(parent, cur, nb)
                        else:
                            cur = nb
                    if labels[y - 1, x]:
                        nb = labels[y - 1, x]
                        if cur:
                            _union(parent, cur, nb)
                        else:
                            cur = nb
                    if x + 1 < w and labels[y - 1, x + 1]:
                        nb = labels[y - 1, x + 1]
                        if cur:
                            _union(parent, cur, nb)
                        else:
                            cur = nb
                if not cur:
                    nl += 1
                    parent[nl] = <int>nl
                    cur = nl
                labels[y, x] = <int>cur
    dense_arr = np.zeros(nl + 1, dtype=np.int32)
    cdef int[::1] dense = dense_arr
    cdef int count = 0
    cdef Py_ssize_t root
    with nogil:
        for y in range(h):
            for x in range(w):
                if labels[y, x]:
                    root = _find(parent, labels[y, x])
                    if dense[root] == 0:
                        count += 1
                        dense[root] = count
                    labels[y, x] = dense[root]
    return labels_arr, count


cdef inline long _floordiv(long a, long b) noexcept nogil:
    # b > 0
    cdef long q = a / b
    if (a % b != 0) and (a < 0):
        q -= 1
    return q


def star_fill_pass(const unsigned char[:, ::1] mask, Py_ssize_t cy, Py_ssize_t cx):
    """Union of the digital segments from ``(cy, cx)`` to every set pixel.

    Segment points are ``c + round_half_up(k * d / n)`` for
    ``k = 0..n-1``, ``n = max(|dx|, |dy|)``; ``k = n`` is the pixel itself.
    """
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1]
    out_arr = np.array(mask, dtype=np.uint8, copy=True)
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef long dx, dy, n, k, ox, oy
    with nogil:
        for y in range(h):
            for x in range(w):
                if not mask[y, x]:
                    continue
                dx = x - cx
                dy = y - cy
                n = dx if dx >= 0 else -dx
                if dy > n or -dy > n:
                    n = dy if dy >= 0 else -dy
                for k in range(n):
                    ox = _floordiv(2 * k * dx + n, 2 * n)
                    oy = _floordiv(2 * k * dy + n, 2 * n)
                    out[cy + oy, cx + ox] = 1
    return out_arr


def ellipse_mismatch(const unsigned char[:, ::1] mask, Py_ssize_t oy, Py_ssize_t ox,
                     double mux, double muy, double cxx, double cxy, double cyy,
                     Py_ssize_t y0, Py_ssize_t y1, Py_ssize_t x0, Py_ssize_t x1):
    """Count pixels of ``[y0, y1) x [x0, x1)`` where blob and ellipse differ.

    ``mask`` is the blob with its ``[0, 0]`` element at global pixel
    ``(oy, ox)``; the ellipse is ``E(mu, C)``.
    """
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1]
    cdef Py_ssize_t y, x, ly, lx
    cdef double det4 = 4.0 * (cxx * cyy - cxy * cxy)
    cdef double dx, dy, qf
    cdef long count = 0
    cdef bint inb, ine
    with nogil:
        for y in range(y0, y1):
            dy = y - muy
            ly = y - oy
            for x in range(x0, x1):
                dx = x - mux
                lx = x - ox
                inb = 0 <= ly < h and 0 <= lx < w and mask[ly, lx] != 0
                qf = cyy * dx * dx - 2.0 * cxy * dx * dy + cxx * dy * dy
                ine = qf <= det4
                if inb != ine:
                    count += 1
    return count
