"""
RPTM Relational Matrix
Verified match counts between same-ID image pairs and the tau thresholds
evaluated on them at mining time.
"""

import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import FeatureConfig, GMSConfig, TauPolicy
from ..errors import CorruptError, DimensionError, FormatError, IoError
from ..features import FeatureSet, extract
from ..gmsmatch import match_count
from ..imageio import load_image
from .manifest import DatasetManifest

logger = logging.getLogger(__name__)

MATRIX_MAGIC = b"RPTM"
MATRIX_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")


@dataclass(frozen=True)
class RelationalMatrix:
    """Symmetric m x m match counts, zero on the diagonal and across ids"""
    m: int
    counts: np.ndarray
    manifest_hash: int

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.uint32)
        if counts.shape != (self.m, self.m):
            raise DimensionError(f"counts shape {counts.shape} does not match m={self.m}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def row(self, i: int) -> np.ndarray:
        return self.counts[i]

    def check_invariants(self, ids: Optional[Sequence[str]] = None) -> None:
        """Raise CorruptError unless symmetric, zero-diagonal (and zero across ids)"""
        if np.any(np.diag(self.counts) != 0):
            raise CorruptError("relational matrix has a nonzero diagonal")
        if not np.array_equal(self.counts, self.counts.T):
            raise CorruptError("relational matrix is not symmetric")
        if ids is not None:
            labels = np.asarray(ids)
            cross = labels[:, None] != labels[None, :]
            if np.any(self.counts[cross] != 0):
                raise CorruptError("relational matrix has counts between different ids")

    def __eq__(self, other) -> bool:
        if not isinstance(other, RelationalMatrix):
            return NotImplemented
        return (self.m == other.m and self.manifest_hash == other.manifest_hash
                and np.array_equal(self.counts, other.counts))

    __hash__ = None


def same_id_pairs(manifest: DatasetManifest) -> List[Tuple[int, int]]:
    """Unordered (i, j), i < j, pairs sharing an id"""
    pairs = []
    for members in manifest.id_groups().values():
        pairs.extend(combinations(sorted(members), 2))
    return sorted(pairs)


def _extract_one(manifest: DatasetManifest, index: int, cfg: FeatureConfig) -> FeatureSet:
    path = manifest.resolve(index)
    try:
        img = load_image(path)
    except FormatError as e:
        raise FormatError(f"image {index}: {e.message}", e.offset, e.filename) from e
    except IoError as e:
        raise IoError(f"image {index}: {e}") from e
    features = extract(img, cfg)
    logger.debug("image %d (%s): %d features", index, path.name, len(features))
    return features


def build_relational_matrix(
    manifest: DatasetManifest,
    feature_cfg: Optional[FeatureConfig] = None,
    gms_cfg: Optional[GMSConfig] = None,
    threads: int = 1,
) -> RelationalMatrix:
    """Match every same-ID pair once in each direction and keep the larger count"""
    feature_cfg = feature_cfg or FeatureConfig()
    gms_cfg = gms_cfg or GMSConfig()
    manifest.validate(min_per_id=1)
    m = len(manifest)
    pairs = same_id_pairs(manifest)
    needed = sorted({i for pair in pairs for i in pair})

    logger.info("extracting features for %d of %d images", len(needed), m)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        extracted = list(pool.map(lambda i: _extract_one(manifest, i, feature_cfg), needed))
        features = dict(zip(needed, extracted))

        def pair_count(pair: Tuple[int, int]) -> int:
            i, j = pair
            return max(match_count(features[i], features[j], gms_cfg),
                       match_count(features[j], features[i], gms_cfg))

        logger.info("matching %d same-id pairs", len(pairs))
        values = list(pool.map(pair_count, pairs))

    counts = np.zeros((m, m), dtype=np.uint32)
    for (i, j), value in zip(pairs, values):
        counts[i, j] = counts[j, i] = value
    return RelationalMatrix(m, counts, manifest.content_hash())


def tau(row: np.ndarray, policy: Union[TauPolicy, str], tau_min: float = 10) -> Optional[float]:
    """Per-anchor threshold over the nonzero counts, None if there are none"""
    policy = TauPolicy(policy)
    row = np.asarray(row)
    nonzero = row[row > 0]
    if nonzero.size == 0:
        return None
    if policy is TauPolicy.MEAN:
        return float(nonzero.astype(np.float64).mean())
    if policy is TauPolicy.MAX:
        return float(nonzero.max())
    return float(tau_min)


def save_matrix(mx: RelationalMatrix, path: Union[str, Path]) -> None:
    """Write the little-endian RPTM matrix file"""
    blob = (_HEADER.pack(MATRIX_MAGIC, MATRIX_VERSION, mx.m, mx.manifest_hash)
            + mx.counts.astype("<u4").tobytes())
    try:
        Path(path).write_bytes(blob)
    except OSError as e:
        raise IoError(f"cannot write matrix {path}: {e.strerror or e}") from e


def load_matrix(path: Union[str, Path]) -> RelationalMatrix:
    """Read and verify an RPTM matrix file"""
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise IoError(f"cannot read matrix {path}: {e.strerror or e}") from e

    if len(blob) < _HEADER.size:
        raise CorruptError(f"{path}: truncated header")
    magic, version, m, manifest_hash = _HEADER.unpack_from(blob)
    if magic != MATRIX_MAGIC:
        raise CorruptError(f"{path}: bad magic {magic!r}")
    if version != MATRIX_VERSION:
        raise CorruptError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 4 * m * m
    if len(blob) != expected:
        raise CorruptError(f"{path}: size {len(blob)} bytes, expected {expected} for m={m}")

    counts = np.frombuffer(blob, dtype="<u4", offset=_HEADER.size).reshape(m, m)
    mx = RelationalMatrix(m, counts, manifest_hash)
    try:
        mx.check_invariants()
    except CorruptError as e:
        raise CorruptError(f"{path}: {e}") from e
    return mx
