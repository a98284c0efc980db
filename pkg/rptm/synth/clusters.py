"""
RPTM Synthetic Embedding Clusters
Gaussian clusters per (id, pose) and a relational matrix simulated from
the ground-truth pose groups, for image-free benchmarks.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field

from ..config import ConfigSection
from ..relational import DatasetManifest, RelationalMatrix
from .images import id_name


class ClusterSpec(ConfigSection):
    """Cluster counts, dimension and separations"""
    n_ids: int = Field(10, ge=1)
    poses_per_id: int = Field(2, ge=1)
    points_per_pose: int = Field(10, ge=1)
    dim: int = Field(16, ge=1)
    within_sigma: float = Field(0.1, ge=0.0)
    pose_separation: float = Field(10.0, ge=0.0)
    id_separation: float = Field(10.0, ge=0.0)


def generate_embeddings(
    spec: Optional[ClusterSpec] = None, seed: int = 0
) -> Tuple[np.ndarray, List[str], np.ndarray]:
    """(vectors, ids, pose labels); poses sit pose_separation from their id centre"""
    spec = spec or ClusterSpec()
    rng = np.random.default_rng(seed)
    vectors, ids, poses = [], [], []
    for i in range(spec.n_ids):
        centre = rng.standard_normal(spec.dim) * spec.id_separation
        for p in range(spec.poses_per_id):
            direction = rng.standard_normal(spec.dim)
            direction /= np.linalg.norm(direction) or 1.0
            pose_centre = centre + spec.pose_separation * direction
            points = pose_centre + spec.within_sigma * rng.standard_normal(
                (spec.points_per_pose, spec.dim)
            )
            vectors.append(points)
            ids.extend([id_name(i)] * spec.points_per_pose)
            poses.extend([i * spec.poses_per_id + p] * spec.points_per_pose)
    return np.vstack(vectors), ids, np.array(poses, dtype=np.intp)


def embedding_manifest(ids: Sequence[str]) -> DatasetManifest:
    """Manifest with placeholder paths for image-free runs"""
    return DatasetManifest.from_pairs((f"vec_{i:05d}", ident) for i, ident in enumerate(ids))


def simulated_matrix(
    manifest: DatasetManifest,
    pose_labels: Sequence[int],
    seed: int = 0,
    within: Tuple[int, int] = (30, 60),
    cross: Tuple[int, int] = (1, 5),
    cross_rate: float = 0.1,
) -> RelationalMatrix:
    """Match counts as GMS would give them: high inside a pose group,
    occasionally a few spurious ones across poses of the same id."""
    rng = np.random.default_rng(seed)
    pose_labels = np.asarray(pose_labels)
    ids = manifest.ids
    m = len(manifest)
    counts = np.zeros((m, m), dtype=np.uint32)
    for i in range(m):
        for j in range(i + 1, m):
            if ids[i] != ids[j]:
                continue
            if pose_labels[i] == pose_labels[j]:
                value = rng.integers(within[0], within[1] + 1)
            elif rng.random() < cross_rate:
                value = rng.integers(cross[0], cross[1] + 1)
            else:
                value = 0
            counts[i, j] = counts[j, i] = value
    return RelationalMatrix(m, counts, manifest.content_hash())
