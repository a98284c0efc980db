"""
RPTM Synthetic Image Dataset
Each id owns a random-rectangle texture with fixed fine surface detail,
split into disjoint pose regions. Every image renders one region under that
pose's homography plus a small per-instance perspective jitter and Gaussian noise.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from pydantic import Field
from scipy.ndimage import gaussian_filter, map_coordinates

from ..config import ConfigSection, read_document, validate_section
from ..errors import FormatError, IoError
from ..evalrank import write_split
from ..imageio import GrayImage, save_image
from ..relational import DatasetManifest
from ..tabular import read_csv, write_csv

logger = logging.getLogger(__name__)

POSE_WARP = 0.10
INSTANCE_JITTER = 0.03
RECTS_PER_POSE = 48
DETAIL_SIGMA = 3.0
DETAIL_STD = 12.0
# Rectangle levels leave headroom for the detail before clipping.
FLAT_LEVELS = (30.0, 225.0)


class SynthSpec(ConfigSection):
    """Dataset shape, image size, noise level and seed"""
    n_ids: int = Field(2, ge=1)
    poses_per_id: int = Field(2, ge=1)
    images_per_pose: int = Field(3, ge=1)
    image_size: int = Field(224, ge=16)
    noise_sigma: float = Field(2.0, ge=0.0)
    seed: int = 0

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SynthSpec":
        return validate_section(cls, read_document(path))

    @property
    def image_count(self) -> int:
        return self.n_ids * self.poses_per_id * self.images_per_pose


@dataclass(frozen=True)
class SynthDataset:
    """Manifest, per-image pose group and query/gallery split"""
    manifest: DatasetManifest
    pose_labels: np.ndarray
    splits: List[str]


def id_name(i: int) -> str:
    return f"id{i:03d}"


def layout(spec: SynthSpec) -> List[Tuple[int, int, int]]:
    """(id, pose, instance) per image index"""
    return [(i, p, n)
            for i in range(spec.n_ids)
            for p in range(spec.poses_per_id)
            for n in range(spec.images_per_pose)]


def render_texture(spec: SynthSpec, ident: int) -> np.ndarray:
    """size x (poses * size) canvas; pose p owns columns [p * size, (p + 1) * size)"""
    size = spec.image_size
    rng = np.random.default_rng([spec.seed, 1, ident])
    canvas = np.empty((size, spec.poses_per_id * size), dtype=np.float64)
    for p in range(spec.poses_per_id):
        region = canvas[:, p * size:(p + 1) * size]
        region[:] = rng.uniform(*FLAT_LEVELS)
        for _ in range(RECTS_PER_POSE):
            w, h = rng.integers(size // 16 + 2, size // 4 + 3, size=2)
            x0, y0 = rng.integers(0, size - 1, size=2)
            region[y0:y0 + h, x0:x0 + w] = rng.uniform(*FLAT_LEVELS)
        # Surface detail is fixed per pose: shared by its instances, not by other poses.
        detail = gaussian_filter(rng.standard_normal((size, size)), DETAIL_SIGMA)
        region += detail * (DETAIL_STD / (detail.std() or 1.0))
    return np.clip(canvas, 0.0, 255.0)


def _homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """3x3 H with H @ (x, y, 1) ~ dst for the four src corners"""
    rows, rhs = [], []
    for (x, y), (u, v) in zip(src, dst):
        rows.append([x, y, 1, 0, 0, 0, -u * x, -u * y])
        rows.append([0, 0, 0, x, y, 1, -v * x, -v * y])
        rhs.extend((u, v))
    h = np.linalg.solve(np.array(rows, dtype=np.float64), np.array(rhs, dtype=np.float64))
    return np.append(h, 1.0).reshape(3, 3)


def _inward(rng: np.random.Generator, fraction: float, extent: float) -> np.ndarray:
    """Corner offsets pointing into the square, at most fraction * extent"""
    toward = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=np.float64)
    return toward * rng.uniform(0, fraction * extent, size=(4, 2))


def render_image(spec: SynthSpec, texture: np.ndarray, pose: int, index: int) -> GrayImage:
    size = spec.image_size
    extent = size - 1
    corners = np.array([[0, 0], [extent, 0], [extent, extent], [0, extent]], dtype=np.float64)
    pose_rng = np.random.default_rng([spec.seed, 2, index // spec.images_per_pose])
    rng = np.random.default_rng([spec.seed, 3, index])

    src = corners + _inward(pose_rng, POSE_WARP, extent) + _inward(rng, INSTANCE_JITTER, extent)
    src[:, 0] += pose * size
    h = _homography(corners, src)

    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    mapped = h @ np.stack([xs.ravel(), ys.ravel(), np.ones(xs.size)])
    sx, sy = mapped[0] / mapped[2], mapped[1] / mapped[2]
    warped = map_coordinates(texture, [sy, sx], order=1, mode="nearest").reshape(size, size)
    if spec.noise_sigma > 0:
        warped = warped + rng.normal(0.0, spec.noise_sigma, size=warped.shape)
    return GrayImage.from_array(warped)


def generate_dataset(spec: SynthSpec, out_dir: Union[str, Path], threads: int = 1) -> SynthDataset:
    """Write images, manifest.csv, poses.csv and split.csv under out_dir"""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create {out_dir}: {e.strerror or e}") from e

    items = layout(spec)
    textures = [render_texture(spec, i) for i in range(spec.n_ids)]

    def write_one(index: int) -> str:
        ident, pose, _ = items[index]
        name = f"img_{index:05d}.pgm"
        save_image(render_image(spec, textures[ident], pose, index), out_dir / name)
        return name

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        names = list(pool.map(write_one, range(len(items))))

    manifest = DatasetManifest.from_pairs(
        ((name, id_name(ident)) for name, (ident, _, _) in zip(names, items)), out_dir
    )
    pose_labels = np.array([ident * spec.poses_per_id + pose for ident, pose, _ in items],
                           dtype=np.intp)
    splits = ["query" if n == 0 else "gallery" for _, _, n in items]

    manifest.save(out_dir / "manifest.csv")
    write_poses(pose_labels, out_dir / "poses.csv")
    write_split(manifest.ids, splits, out_dir / "split.csv")
    logger.info("wrote %d images for %d ids to %s", len(items), spec.n_ids, out_dir)
    return SynthDataset(manifest, pose_labels, splits)


def write_poses(pose_labels: np.ndarray, path: Union[str, Path]) -> None:
    write_csv(path, ("index", "pose"), enumerate(int(p) for p in pose_labels))


def read_poses(path: Union[str, Path]) -> np.ndarray:
    rows = read_csv(path, ("index", "pose"))
    labels = np.full(len(rows), -1, dtype=np.intp)
    for row in rows:
        try:
            index, pose = int(row[0]), int(row[1])
        except ValueError:
            raise FormatError(f"non-integer row {row}", filename=str(path)) from None
        if not 0 <= index < len(rows):
            raise FormatError(f"index {index} out of range", filename=str(path))
        labels[index] = pose
    return labels
