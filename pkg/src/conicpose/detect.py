"""Bright-ellipse detection and wheel-pair selection.

Pipeline: box-smooth with a window a fixed fraction of the shortest
image side, flag pixels exceeding their local mean by a multiple of the
local-mean image's standard deviation, label 8-connected blobs, star-fill
them, take blob moments and keep blobs whose equivalent ellipse
``E(mu, C)`` matches them closely.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import kernels
from .conic import eigen2
from .raster import IntegralImage, as_gray

REFERENCE_AREA = 800 * 600


@dataclass
class DetectConfig:
    """Detection parameters.

    ``min_blob_px`` applies at an 800x600 reference size; the pipeline
    scales it by image area.  Ellipses with ``a2 / a1 >= round_ratio``
    count as circles and match any orientation when pairing.
    """

    window_frac: float = 0.10
    threshold_sigmas: float = 1.0
    min_blob_px: int = 20
    mismatch_max: float = 0.20
    area_consistency_frac: float = 0.15
    min_area_frac: float = 0.0015
    max_area_frac: float = 0.25
    pair_orientation_tol: float = 0.26
    pair_horizontal_tol: float = 0.52
    round_ratio: float = 0.95

    def __post_init__(self):
        if not 0 < self.window_frac < 1:
            raise ValueError("window_frac must lie in (0, 1)")
        for name in (
            "mismatch_max",
            "area_consistency_frac",
            "pair_orientation_tol",
            "pair_horizontal_tol",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.threshold_sigmas < 0:
            raise ValueError("threshold_sigmas must be non-negative")
        if not 0 <= self.min_area_frac < self.max_area_frac:
            raise ValueError("need 0 <= min_area_frac < max_area_frac")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class Blob:
    """An 8-connected pixel set with its exact population moments.

    ``pixels`` is an ``(n, 2)`` integer array of ``(x, y)`` in raster
    order.
    """

    label: int
    pixels: np.ndarray = field(repr=False)
    area: int
    mu: np.ndarray
    C: np.ndarray

    @classmethod
    def from_pixels(cls, label, pixels):
        pixels = np.asarray(pixels, dtype=np.int64).reshape(-1, 2)
        order = np.lexsort((pixels[:, 0], pixels[:, 1]))
        pixels = pixels[order]
        n, mu, C = blob_moments(pixels)
        return cls(label, pixels, n, mu, C)

    def bbox(self):
        """``(x0, y0, x1, y1)``, half-open."""
        lo = self.pixels.min(axis=0)
        hi = self.pixels.max(axis=0) + 1
        return int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1])

    def mask(self):
        """Local boolean mask and its global ``(x0, y0)`` origin."""
        x0, y0, x1, y1 = self.bbox()
        m = np.zeros((y1 - y0, x1 - x0), dtype=np.uint8)
        m[self.pixels[:, 1] - y0, self.pixels[:, 0] - x0] = 1
        return m, (x0, y0)


@dataclass(frozen=True)
class DetectedEllipse:
    label: int
    mu: np.ndarray
    C: np.ndarray
    a1: float
    a2: float
    orientation: float
    mismatch_ratio: float
    area: int


@dataclass(frozen=True)
class Rejection:
    label: int
    reason: str
    mismatch_ratio: float = float("nan")


@dataclass(frozen=True)
class WheelPair:
    """Two wheel ellipses.  ``back`` is merely the left-most one; which
    is really the back wheel is left to pose enumeration."""

    back: DetectedEllipse
    front: DetectedEllipse


def blob_moments(pixels):
    """Exact ``(|W|, mu, C)`` of an integer pixel set.

    Raw integer sums are accumulated in Python ints, then each entry is
    formed by a single correctly-rounded int/int division, e.g.
    ``C_xx = (n Sxx - Sx^2) / n^2``.  The result is therefore the
    float nearest the exact rational moment, independent of summation
    order.
    """
    p = np.asarray(pixels, dtype=np.int64).reshape(-1, 2)
    n = len(p)
    if n == 0:
        raise ValueError("empty pixel set")
    x = p[:, 0]
    y = p[:, 1]
    sx, sy = int(x.sum()), int(y.sum())
    sxx, syy, sxy = int((x * x).sum()), int((y * y).sum()), int((x * y).sum())
    nn = n * n
    mu = np.array([sx / n, sy / n])
    cxx = (n * sxx - sx * sx) / nn
    cyy = (n * syy - sy * sy) / nn
    cxy = (n * sxy - sx * sy) / nn
    return n, mu, np.array([[cxx, cxy], [cxy, cyy]])


def window_half_width(shape, cfg: DetectConfig) -> int:
    """Half-width of the smoothing window; its side is ``2 h + 1``."""
    side = cfg.window_frac * min(shape[:2])
    return max(0, int(math.floor(side / 2 + 0.5)))


def smooth(img, cfg: DetectConfig) -> np.ndarray:
    """Box-filter ``img`` with edge windows slid inside the image."""
    img = as_gray(img)
    return IntegralImage(img).mean_image(window_half_width(img.shape, cfg))


def normalize_and_threshold(img, local_mean, cfg: DetectConfig) -> np.ndarray:
    """Pixels brighter than their local mean by ``k`` std-devs.

    The std-dev is that of the local-mean image.  Strict inequality, so a
    flat image has no bright pixels.
    """
    img = as_gray(img)
    local_mean = np.asarray(local_mean, dtype=float)
    if img.shape != local_mean.shape:
        raise ValueError(f"shape mismatch: {img.shape} vs {local_mean.shape}")
    with np.errstate(invalid="ignore"):
        thresh = cfg.threshold_sigmas * float(local_mean.std())
    if math.isnan(thresh):
        thresh = math.inf
    return (img - local_mean) > thresh


def label_components(binary, cfg: DetectConfig, min_px=None) -> list[Blob]:
    """8-connected blobs of at least ``min_px`` (default ``cfg.min_blob_px``)
    pixels, labelled densely from 1 in raster discovery order."""
    min_px = cfg.min_blob_px if min_px is None else min_px
    mask = np.ascontiguousarray(binary, dtype=np.uint8)
    labels, count = kernels.label8(mask)
    if count == 0:
        return []
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    sizes = np.bincount(flat, minlength=count + 1)
    bounds = np.cumsum(sizes)
    w = mask.shape[1]
    blobs = []
    for lab in range(1, count + 1):
        if sizes[lab] < min_px:
            continue
        idx = order[bounds[lab - 1] : bounds[lab]]
        pix = np.stack([idx % w, idx // w], axis=1)
        blobs.append(Blob.from_pixels(len(blobs) + 1, pix))
    return blobs


def star_fill(blob: Blob, shape=None) -> Blob:
    """Radially fill ``blob`` towards its centre.

    Every pixel on the digital segment between a blob pixel and the
    rounded blob mean is added.  The centre is recomputed and the fill
    repeated until nothing changes, which makes the operation idempotent
    and the output star-shaped about its own rounded mean.  Segments stay
    inside the blob's bounding box, so ``shape`` is only informational.
    """
    mask, (x0, y0) = blob.mask()
    n = blob.area
    sx, sy = int(blob.pixels[:, 0].sum()), int(blob.pixels[:, 1].sum())
    while True:
        # round-half-up of the exact mean sx / n
        cx = (2 * sx + n) // (2 * n) - x0
        cy = (2 * sy + n) // (2 * n) - y0
        filled = kernels.star_fill_pass(mask, cy, cx)
        if np.array_equal(filled, mask):
            break
        mask = filled
        ys, xs = np.nonzero(mask)
        n = len(xs)
        sx = int(xs.sum()) + n * x0
        sy = int(ys.sum()) + n * y0
    if n == blob.area:
        return blob
    ys, xs = np.nonzero(mask)
    return Blob.from_pixels(blob.label, np.stack([xs + x0, ys + y0], axis=1))


def ellipse_bbox(mu, C):
    """Half-open integer pixel box covering ``E(mu, C)``."""
    hx = 2.0 * math.sqrt(max(C[0, 0], 0.0))
    hy = 2.0 * math.sqrt(max(C[1, 1], 0.0))
    return (
        int(math.floor(mu[0] - hx)),
        int(math.floor(mu[1] - hy)),
        int(math.ceil(mu[0] + hx)) + 1,
        int(math.ceil(mu[1] + hy)) + 1,
    )


def mismatch_count(blob: Blob) -> int:
    """Pixels in exactly one of ``blob`` and its equivalent ellipse."""
    mask, (ox, oy) = blob.mask()
    ex0, ey0, ex1, ey1 = ellipse_bbox(blob.mu, blob.C)
    bx0, by0, bx1, by1 = blob.bbox()
    x0, y0 = min(ex0, bx0), min(ey0, by0)
    x1, y1 = max(ex1, bx1), max(ey1, by1)
    C = blob.C
    return int(
        kernels.ellipse_mismatch(
            mask, oy, ox,
            float(blob.mu[0]), float(blob.mu[1]),
            float(C[0, 0]), float(C[0, 1]), float(C[1, 1]),
            y0, y1, x0, x1,
        )
    )


def ellipse_filter(blob: Blob, cfg: DetectConfig) -> DetectedEllipse | Rejection:
    """Accept ``blob`` as an ellipse or say why not."""
    C = blob.C
    det = C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0]
    if not det > 0:
        return Rejection(blob.label, "degenerate")
    if abs(blob.area - 4.0 * math.pi * math.sqrt(det)) > cfg.area_consistency_frac * blob.area:
        return Rejection(blob.label, "area")
    ratio = mismatch_count(blob) / blob.area
    if ratio > cfg.mismatch_max:
        return Rejection(blob.label, "mismatch", ratio)
    ax = eigen2(C)
    orient = float(math.atan2(ax.major_dir[1], ax.major_dir[0]) % math.pi)
    return DetectedEllipse(
        blob.label, blob.mu, C, ax.a1, ax.a2, orient, ratio, blob.area
    )


def effective_min_blob_px(shape, cfg: DetectConfig) -> int:
    h, w = shape[:2]
    return max(1, int(round(cfg.min_blob_px * (h * w) / REFERENCE_AREA)))


def detect_ellipses(img, cfg: DetectConfig | None = None) -> list[DetectedEllipse]:
    """Run the full pipeline; results sorted by mismatch ratio."""
    cfg = cfg or DetectConfig()
    gray = as_gray(img)
    if min(gray.shape) < 16:
        raise ValueError("image must be at least 16x16")
    local = smooth(gray, cfg)
    bright = normalize_and_threshold(gray, local, cfg)
    blobs = label_components(bright, cfg, effective_min_blob_px(gray.shape, cfg))
    found = []
    for blob in blobs:
        res = ellipse_filter(star_fill(blob, gray.shape), cfg)
        if isinstance(res, DetectedEllipse):
            found.append(res)
    found.sort(key=lambda e: (e.mismatch_ratio, e.label))
    return found


def _is_round(e, cfg) -> bool:
    return e.a2 >= cfg.round_ratio * e.a1


def _orientation_gap(t1, t2) -> float:
    d = abs(t1 - t2) % math.pi
    return min(d, math.pi - d)


def select_wheel_pair(ellipses, shape, cfg: DetectConfig | None = None) -> WheelPair | None:
    """Choose the two ellipses most likely to be a vehicle's wheels.

    Size-filter by area fraction, drop pairs with differing orientation
    or a steep centre line, and return the survivor pair with the lowest
    summed mismatch.
    """
    cfg = cfg or DetectConfig()
    total = shape[0] * shape[1]
    cands = [
        e for e in ellipses
        if cfg.min_area_frac * total <= e.area <= cfg.max_area_frac * total
    ]
    best = None
    for e1, e2 in itertools.combinations(cands, 2):
        if np.array_equal(e1.mu, e2.mu):
            continue
        if not (_is_round(e1, cfg) or _is_round(e2, cfg)):
            if _orientation_gap(e1.orientation, e2.orientation) > cfg.pair_orientation_tol:
                continue
        dx, dy = e2.mu - e1.mu
        if math.atan2(abs(dy), abs(dx)) > cfg.pair_horizontal_tol:
            continue
        score = e1.mismatch_ratio + e2.mismatch_ratio
        if best is None or score < best[0]:
            best = (score, e1, e2)
    if best is None:
        return None
    _, e1, e2 = best
    if (e2.mu[0], e2.mu[1]) < (e1.mu[0], e1.mu[1]):
        e1, e2 = e2, e1
    return WheelPair(e1, e2)
