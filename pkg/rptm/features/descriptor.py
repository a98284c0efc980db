"""
RPTM Binary Descriptors
Steered 256-bit intensity-comparison descriptors and the extraction pipeline.
"""

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from ..config import FeatureConfig
from ..errors import CorruptError, DimensionError, IoError
from ..imageio import GrayImage, build_pyramid, resize_bilinear
from .keypoints import Keypoint, detect_keypoints

logger = logging.getLogger(__name__)

DESCRIPTOR_BITS = 256
DESCRIPTOR_BYTES = DESCRIPTOR_BITS // 8
PATCH_RADIUS = 15
BORDER = 16
PAIR_TABLE = Path(__file__).parent / "data" / "pair_table.txt"


@dataclass(frozen=True)
class BinaryDescriptor:
    """256-bit descriptor stored as 32 bytes"""
    bits: bytes

    def __post_init__(self):
        if len(self.bits) != DESCRIPTOR_BYTES:
            raise DimensionError(
                f"descriptor must be {DESCRIPTOR_BYTES} bytes, got {len(self.bits)}"
            )

    @classmethod
    def from_array(cls, row: np.ndarray) -> "BinaryDescriptor":
        return cls(np.asarray(row, dtype=np.uint8).tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.bits, dtype=np.uint8)


@dataclass(frozen=True)
class FeatureSet:
    """Keypoints with parallel descriptors for one image"""
    keypoints: Tuple[Keypoint, ...]
    descriptors: np.ndarray        # (n, 32) uint8
    image_dims: Tuple[int, int]

    def __post_init__(self):
        descriptors = np.asarray(self.descriptors, dtype=np.uint8).reshape(-1, DESCRIPTOR_BYTES)
        descriptors.setflags(write=False)
        object.__setattr__(self, "keypoints", tuple(self.keypoints))
        object.__setattr__(self, "descriptors", descriptors)
        if len(self.keypoints) != len(descriptors):
            raise DimensionError(
                f"{len(self.keypoints)} keypoints but {len(descriptors)} descriptors"
            )

    @classmethod
    def empty(cls, image_dims: Tuple[int, int]) -> "FeatureSet":
        return cls((), np.zeros((0, DESCRIPTOR_BYTES), dtype=np.uint8), image_dims)

    def __len__(self) -> int:
        return len(self.keypoints)

    def descriptor(self, i: int) -> BinaryDescriptor:
        return BinaryDescriptor.from_array(self.descriptors[i])

    @cached_property
    def points(self) -> np.ndarray:
        """(n, 2) array of level-0 (x, y) coordinates"""
        if not self.keypoints:
            return np.zeros((0, 2))
        return np.array([(kp.x, kp.y) for kp in self.keypoints], dtype=np.float64)

    @cached_property
    def bit_matrix(self) -> np.ndarray:
        """(n, 256) 0/1 matrix of descriptor bits"""
        return np.unpackbits(self.descriptors, axis=1, bitorder='little')

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureSet):
            return NotImplemented
        return (self.keypoints == other.keypoints
                and self.image_dims == other.image_dims
                and np.array_equal(self.descriptors, other.descriptors))

    __hash__ = None


@lru_cache(maxsize=None)
def _read_pair_table(path: str) -> np.ndarray:
    try:
        lines = Path(path).read_text(encoding="ascii").split("\n")
    except OSError as e:
        raise IoError(f"cannot read pair table {path}: {e.strerror or e}") from e
    rows = [line.split() for line in lines if line.strip()]
    if len(rows) != DESCRIPTOR_BITS or any(len(r) != 4 for r in rows):
        raise CorruptError(f"{path}: expected {DESCRIPTOR_BITS} rows of 'x1 y1 x2 y2'")
    table = np.array(rows, dtype=np.int64)
    if np.abs(table).max() > PATCH_RADIUS:
        raise CorruptError(f"{path}: offsets outside [-{PATCH_RADIUS}, {PATCH_RADIUS}]")
    table.setflags(write=False)
    return table


def load_pair_table(path: Optional[Path] = None) -> np.ndarray:
    """The fixed (256, 4) comparison-pair layout"""
    return _read_pair_table(str(path or PAIR_TABLE))


def _steer(offsets_x: np.ndarray, offsets_y: np.ndarray, cos: np.ndarray, sin: np.ndarray):
    rx = np.floor(cos * offsets_x - sin * offsets_y + 0.5).astype(np.intp)
    ry = np.floor(sin * offsets_x + cos * offsets_y + 0.5).astype(np.intp)
    return rx, ry


def describe(
    img: GrayImage,
    kps: Sequence[Keypoint],
    scale_factor: float = 1.2,
    blur_sigma: float = 2.0,
    pairs: Optional[np.ndarray] = None,
) -> FeatureSet:
    """Compute steered binary descriptors at each keypoint's own level.

    Keypoints closer than 16 px to their level's border are dropped.
    """
    if not kps:
        return FeatureSet.empty(img.dims)
    pairs = load_pair_table() if pairs is None else np.asarray(pairs, dtype=np.int64)

    levels = max(kp.level for kp in kps) + 1
    pyramid = build_pyramid(img, levels, scale_factor)

    kept: List[Keypoint] = []
    rows: List[np.ndarray] = []
    positions: List[int] = []
    for level, layer in enumerate(pyramid):
        members = [(n, kp) for n, kp in enumerate(kps) if kp.level == level]
        if not members:
            continue
        scale = scale_factor ** level
        xs = np.array([np.floor(kp.x / scale + 0.5) for _, kp in members], dtype=np.intp)
        ys = np.array([np.floor(kp.y / scale + 0.5) for _, kp in members], dtype=np.intp)
        inside = ((xs >= BORDER) & (xs <= layer.width - 1 - BORDER)
                  & (ys >= BORDER) & (ys <= layer.height - 1 - BORDER))
        if not inside.any():
            continue
        sel = np.nonzero(inside)[0]
        angles = np.array([members[i][1].angle for i in sel])
        cos = np.cos(angles)[:, None]
        sin = np.sin(angles)[:, None]

        smooth = layer.as_float()
        if blur_sigma > 0:
            smooth = ndimage.gaussian_filter(smooth, blur_sigma, mode='nearest')
        x1, y1 = _steer(pairs[None, :, 0], pairs[None, :, 1], cos, sin)
        x2, y2 = _steer(pairs[None, :, 2], pairs[None, :, 3], cos, sin)
        cx = xs[sel][:, None]
        cy = ys[sel][:, None]
        bits = smooth[cy + y1, cx + x1] < smooth[cy + y2, cx + x2]
        packed = np.packbits(bits, axis=1, bitorder='little')

        for row, i in enumerate(sel):
            n, kp = members[i]
            positions.append(n)
            kept.append(kp)
            rows.append(packed[row])

    if not kept:
        return FeatureSet.empty(img.dims)
    # Restore the caller's keypoint order.
    order = np.argsort(positions, kind='stable')
    return FeatureSet(
        tuple(kept[i] for i in order),
        np.stack([rows[i] for i in order]),
        img.dims,
    )


def extract(img: GrayImage, cfg: Optional[FeatureConfig] = None) -> FeatureSet:
    """Resize to the matching size, detect and describe"""
    cfg = cfg or FeatureConfig()
    width, height = cfg.match_size
    resized = resize_bilinear(img, width, height)
    kps = detect_keypoints(
        resized,
        fast_threshold=cfg.fast_threshold,
        max_features=cfg.max_features,
        levels=cfg.pyramid_levels,
        scale_factor=cfg.scale_factor,
        harris_k=cfg.harris_k,
    )
    features = describe(resized, kps, cfg.scale_factor, cfg.blur_sigma)
    logger.debug("extracted %d of %d keypoints", len(features), len(kps))
    return features
