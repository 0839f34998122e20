"""Image containers, integral images and binary PNM I/O.

Images are plain numpy arrays indexed ``[row, col]`` = ``[y, x]``:
grayscale images are ``float64`` ``(h, w)`` arrays with values in
``[0, 1]``, colour images ``(h, w, 3)`` in R, G, B order.  Pixel
``(x, y)`` has its centre at integer coordinates, origin top-left.
"""

from __future__ import annotations

import os
import re

import numpy as np

LUMA = np.array([0.299, 0.587, 0.114])


class PNMError(ValueError):
    """Malformed PGM/PPM data."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def as_gray(img) -> np.ndarray:
    """Validate a grayscale image, or convert a colour one."""
    img = np.asarray(img)
    if img.ndim == 3:
        return to_gray(img)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D or 3-channel image, got shape {img.shape}")
    if img.size == 0:
        raise ValueError("empty image")
    return img.astype(float, copy=False)


def to_gray(rgb) -> np.ndarray:
    """Rec.601 luma of an RGB image.

    Channels in ``[0, 255]`` are detected by a maximum above 1 (or an
    integer dtype) and rescaled.
    """
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) image, got shape {rgb.shape}")
    if rgb.shape[0] == 0 or rgb.shape[1] == 0:
        raise ValueError("empty image")
    data = rgb.astype(float)
    if np.issubdtype(rgb.dtype, np.integer) or data.max() > 1.0:
        data = data / 255.0
    return np.clip(data @ LUMA, 0.0, 1.0)


class IntegralImage:
    """Summed-area table with one row and column of zero padding.

    ``table[r, c]`` is the sum of all pixels in rows ``< r`` and columns
    ``< c``.
    """

    def __init__(self, img):
        img = as_gray(img)
        self.height, self.width = img.shape
        table = np.zeros((self.height + 1, self.width + 1))
        np.cumsum(np.cumsum(img, axis=0), axis=1, out=table[1:, 1:])
        table.setflags(write=False)
        self.table = table

    def box_sum(self, r0, c0, r1, c1):
        """Sum over rows ``[r0, r1)`` and columns ``[c0, c1)``; vectorizes."""
        t = self.table
        return t[r1, c1] - t[r0, c1] - t[r1, c0] + t[r0, c0]

    def _window_origin(self, y, x, half_width):
        side = 2 * half_width + 1
        if side > self.height or side > self.width:
            raise ValueError("window exceeds image")
        # slide the window inside the image instead of shrinking it
        r0 = np.clip(np.asarray(y) - half_width, 0, self.height - side)
        c0 = np.clip(np.asarray(x) - half_width, 0, self.width - side)
        return r0, c0, side

    def windowed_mean(self, center, half_width: int) -> float:
        """Mean of the ``(2 half_width + 1)``-square window at ``(x, y)``."""
        x, y = center
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise ValueError("center outside image")
        r0, c0, side = self._window_origin(int(y), int(x), int(half_width))
        return float(self.box_sum(r0, c0, r0 + side, c0 + side)) / (side * side)

    def mean_image(self, half_width: int) -> np.ndarray:
        """``windowed_mean`` evaluated at every pixel."""
        ys = np.arange(self.height)[:, None]
        xs = np.arange(self.width)[None, :]
        r0, c0, side = self._window_origin(ys, xs, int(half_width))
        return self.box_sum(r0, c0, r0 + side, c0 + side) / (side * side)


def build_integral(img) -> IntegralImage:
    return IntegralImage(img)


def windowed_mean(ii: IntegralImage, center, half_width: int) -> float:
    return ii.windowed_mean(center, half_width)


# -- PNM ---------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*([^\s#]+)")


def _header_tokens(data: bytes, count: int, pos: int):
    tokens = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise PNMError("truncated header", pos)
        tokens.append((m.group(1), m.start(1)))
        pos = m.end(1)
    return tokens, pos


def decode_pnm(data: bytes) -> np.ndarray:
    """Decode binary PGM (P5) or PPM (P6) bytes to floats in ``[0, 1]``."""
    if data[:2] not in (b"P5", b"P6"):
        raise PNMError(f"bad magic {data[:2]!r}", 0)
    channels = 1 if data[:2] == b"P5" else 3
    tokens, pos = _header_tokens(data, 3, 2)
    values = []
    for tok, off in tokens:
        if not tok.isdigit():
            raise PNMError(f"bad header field {tok!r}", off)
        values.append(int(tok))
    width, height, maxval = values
    if width <= 0 or height <= 0:
        raise PNMError("empty image", pos)
    if not 0 < maxval <= 65535:
        raise PNMError(f"maxval {maxval} out of range", pos)
    if pos >= len(data) or data[pos : pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise PNMError("missing whitespace after header", pos)
    pos += 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    n = width * height * channels
    body = data[pos : pos + n * dtype.itemsize]
    if len(body) < n * dtype.itemsize:
        raise PNMError("truncated pixel data", pos + len(body))
    pix = np.frombuffer(body, dtype=dtype).astype(float) / maxval
    if channels == 1:
        return pix.reshape(height, width)
    return pix.reshape(height, width, 3)


def read_pnm(path) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_pnm(f.read())


def encode_pnm(img, maxval: int = 255) -> bytes:
    img = np.asarray(img, dtype=float)
    if img.ndim == 2:
        magic, (h, w) = b"P5", img.shape
    elif img.ndim == 3 and img.shape[2] == 3:
        magic, (h, w) = b"P6", img.shape[:2]
    else:
        raise ValueError(f"cannot encode image of shape {img.shape}")
    dtype = ">u2" if maxval > 255 else "u1"
    body = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(dtype).tobytes()
    return b"%s\n%d %d\n%d\n" % (magic, w, h, maxval) + body


def write_pnm(img, path, maxval: int = 255) -> None:
    """Write PGM/PPM atomically (no partial file on failure)."""
    data = encode_pnm(img, maxval)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)
