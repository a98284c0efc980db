"""
RPTM Grayscale Images
Immutable grayscale image type, bilinear resizing and scale pyramids.
"""

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from ..errors import ConfigError, DimensionError

MAX_DIMENSION = 8192
MIN_PYRAMID_DIMENSION = 8


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image; data is a read-only (height, width) uint8 array"""
    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DimensionError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        data = np.asarray(self.data)
        if data.size != self.width * self.height:
            raise DimensionError(
                f"pixel count {data.size} does not match {self.width}x{self.height}"
            )
        data = np.array(data, dtype=np.uint8).reshape(self.height, self.width)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "GrayImage":
        """Build from a 2-D array of intensities (clipped to [0, 255])"""
        array = np.asarray(array)
        if array.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {array.shape}")
        if array.dtype != np.uint8:
            array = np.clip(np.floor(np.asarray(array, dtype=np.float64) + 0.5), 0, 255)
        return cls(array.shape[1], array.shape[0], array.astype(np.uint8))

    @property
    def dims(self):
        return (self.width, self.height)

    def as_float(self) -> np.ndarray:
        return self.data.astype(np.float64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.width, self.height, self.data.tobytes()))


def _sample_positions(n_in: int, n_out: int) -> np.ndarray:
    # Corner-aligned: first and last output samples hit the first and last input pixels.
    if n_out == 1:
        return np.array([(n_in - 1) / 2.0])
    return np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)


def resize_bilinear(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    """Resize with corner-aligned bilinear interpolation"""
    if out_w < 1 or out_h < 1:
        raise DimensionError(f"target dimensions must be >= 1, got {out_w}x{out_h}")
    if (out_w, out_h) == img.dims:
        return img

    xs = _sample_positions(img.width, out_w)
    ys = _sample_positions(img.height, out_h)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    fx = (xs - x0)[np.newaxis, :]
    fy = (ys - y0)[:, np.newaxis]

    src = img.as_float()
    top = src[y0][:, x0] * (1.0 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1.0 - fx) + src[y1][:, x1] * fx
    out = top * (1.0 - fy) + bottom * fy
    out = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    return GrayImage(out_w, out_h, out)


def pyramid_dims(width: int, height: int, levels: int, factor: float) -> List[tuple]:
    """Level dimensions, truncated before any side drops below 8"""
    dims = [(width, height)]
    for i in range(1, levels):
        scale = factor ** i
        w = math.floor(width / scale)
        h = math.floor(height / scale)
        if w < MIN_PYRAMID_DIMENSION or h < MIN_PYRAMID_DIMENSION:
            break
        dims.append((w, h))
    return dims


def build_pyramid(img: GrayImage, levels: int, factor: float) -> List[GrayImage]:
    """Scale pyramid; level i is the input resized by factor**-i"""
    if levels < 1:
        raise ConfigError(f"pyramid levels must be >= 1, got {levels}")
    if factor <= 1:
        raise ConfigError(f"pyramid factor must be > 1, got {factor}")
    pyramid = [img]
    for w, h in pyramid_dims(img.width, img.height, levels, factor)[1:]:
        pyramid.append(resize_bilinear(img, w, h))
    return pyramid
