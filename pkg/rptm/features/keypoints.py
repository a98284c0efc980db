"""
RPTM Keypoint Detection
FAST-9 segment test over a scale pyramid, Harris ranking, 3x3 non-maximum
suppression and intensity-centroid orientation.
"""

import logging
import math
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy import ndimage

from ..errors import ConfigError
from ..imageio import GrayImage, build_pyramid

logger = logging.getLogger(__name__)

# Bresenham circle of radius 3, clockwise from 12 o'clock, as (dx, dy).
FAST_CIRCLE = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)
FAST_ARC = 9
FAST_RADIUS = 3
ORIENTATION_RADIUS = 15
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Keypoint:
    """Oriented corner; (x, y) are level-0 pixel coordinates"""
    x: float
    y: float
    response: float
    angle: float
    level: int


def segment_test(data: np.ndarray, threshold: int) -> np.ndarray:
    """Boolean mask of pixels passing the FAST-9 segment test.

    Pixels closer than 3 px to the border are never corners.
    """
    img = data.astype(np.int32)
    h, w = img.shape
    mask = np.zeros((h, w), dtype=bool)
    r = FAST_RADIUS
    if h <= 2 * r or w <= 2 * r:
        return mask

    center = img[r:h - r, r:w - r]
    brighter = []
    darker = []
    for dx, dy in FAST_CIRCLE:
        ring = img[r + dy:h - r + dy, r + dx:w - r + dx]
        brighter.append(ring > center + threshold)
        darker.append(ring < center - threshold)

    inner = np.zeros(center.shape, dtype=bool)
    n = len(FAST_CIRCLE)
    for flags in (brighter, darker):
        for start in range(n):
            run = flags[start].copy()
            for j in range(1, FAST_ARC):
                run &= flags[(start + j) % n]
            inner |= run
    mask[r:h - r, r:w - r] = inner
    return mask


def harris_response(data: np.ndarray, k: float = 0.04, sigma: float = 1.0) -> np.ndarray:
    """Harris corner measure det(M) - k trace(M)^2"""
    img = data.astype(np.float64)
    ix = ndimage.sobel(img, axis=1, mode='nearest')
    iy = ndimage.sobel(img, axis=0, mode='nearest')
    sxx = ndimage.gaussian_filter(ix * ix, sigma, mode='nearest')
    syy = ndimage.gaussian_filter(iy * iy, sigma, mode='nearest')
    sxy = ndimage.gaussian_filter(ix * iy, sigma, mode='nearest')
    return sxx * syy - sxy * sxy - k * (sxx + syy) ** 2


def _orientation_offsets():
    r = ORIENTATION_RADIUS
    v, u = np.mgrid[-r:r + 1, -r:r + 1]
    inside = u * u + v * v <= r * r
    return u[inside], v[inside]


_ORIENT_U, _ORIENT_V = _orientation_offsets()


def orientation(data: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Intensity-centroid angle atan2(m01, m10) in [0, 2pi)"""
    if len(xs) == 0:
        return np.zeros(0)
    img = data.astype(np.float64)
    h, w = img.shape
    px = np.clip(xs[:, None] + _ORIENT_U[None, :], 0, w - 1)
    py = np.clip(ys[:, None] + _ORIENT_V[None, :], 0, h - 1)
    patch = img[py, px]
    m10 = (patch * _ORIENT_U[None, :]).sum(axis=1)
    m01 = (patch * _ORIENT_V[None, :]).sum(axis=1)
    angle = np.mod(np.arctan2(m01, m10), TWO_PI)
    angle[angle >= TWO_PI] = 0.0
    return angle


def detect_keypoints(
    img: GrayImage,
    fast_threshold: int = 20,
    max_features: int = 10000,
    levels: int = 4,
    scale_factor: float = 1.2,
    harris_k: float = 0.04,
) -> List[Keypoint]:
    """Detect oriented corners over every pyramid level.

    Sorted by descending response, ties by (y, x, level) ascending; at most
    max_features are kept.
    """
    if fast_threshold < 1:
        raise ConfigError(f"fast_threshold must be >= 1, got {fast_threshold}")
    if max_features < 1:
        raise ConfigError(f"max_features must be >= 1, got {max_features}")

    pyramid = build_pyramid(img, levels, scale_factor)
    xs, ys, resp, lvl, lx, ly = [], [], [], [], [], []
    for level, layer in enumerate(pyramid):
        corners = segment_test(layer.data, fast_threshold)
        if not corners.any():
            continue
        harris = harris_response(layer.data, harris_k)
        score = np.where(corners, harris, -np.inf)
        peaks = ndimage.maximum_filter(score, size=3, mode='constant', cval=-np.inf)
        keep = corners & (score == peaks)
        py, px = np.nonzero(keep)
        scale = scale_factor ** level
        xs.append(np.minimum(px * scale, img.width - 1))
        ys.append(np.minimum(py * scale, img.height - 1))
        resp.append(np.maximum(harris[py, px], 0.0))
        lvl.append(np.full(len(px), level, dtype=np.intp))
        lx.append(px)
        ly.append(py)
        logger.debug("level %d (%dx%d): %d corners", level, layer.width, layer.height, len(px))

    if not xs:
        return []

    xs, ys = np.concatenate(xs), np.concatenate(ys)
    resp, lvl = np.concatenate(resp), np.concatenate(lvl)
    lx, ly = np.concatenate(lx), np.concatenate(ly)

    order = np.lexsort((lvl, xs, ys, -resp))[:max_features]
    angles = np.zeros(len(order))
    for level, layer in enumerate(pyramid):
        sel = np.nonzero(lvl[order] == level)[0]
        if len(sel):
            idx = order[sel]
            angles[sel] = orientation(layer.data, lx[idx], ly[idx])

    return [
        Keypoint(float(xs[i]), float(ys[i]), float(resp[i]), float(angles[n]), int(lvl[i]))
        for n, i in enumerate(order)
    ]
