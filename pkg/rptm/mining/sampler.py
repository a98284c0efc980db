"""
RPTM PK Batch Sampling
P identities x K instances per batch.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError, DimensionError
from ..relational import DatasetManifest


@dataclass
class Batch:
    """Image indices with their ids, per-position inputs and embeddings"""
    indices: np.ndarray
    ids: Sequence[str]
    embeddings: Optional[np.ndarray] = None
    inputs: Optional[np.ndarray] = None

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.intp)
        self.ids = list(self.ids)
        if len(self.ids) != len(self.indices):
            raise DimensionError("batch ids must parallel the batch indices")
        if self.embeddings is not None:
            self.embeddings = np.asarray(self.embeddings, dtype=np.float64)
            if len(self.embeddings) != len(self.indices):
                raise DimensionError("batch embeddings must parallel the batch indices")
        if self.inputs is not None:
            self.inputs = np.asarray(self.inputs, dtype=np.float64)
            if len(self.inputs) != len(self.indices):
                raise DimensionError("batch inputs must parallel the batch indices")

    def __len__(self) -> int:
        return len(self.indices)

    def with_embeddings(self, embeddings: np.ndarray) -> "Batch":
        return Batch(self.indices, self.ids, embeddings, self.inputs)


def sample_batch(
    manifest: DatasetManifest,
    rng_seed: int,
    P: int,
    K: int,
    batch_size: Optional[int] = None,
) -> Batch:
    """Sample P distinct ids, then K instances of each.

    Instances are drawn without replacement unless the id has fewer than K.
    """
    if K < 2:
        raise ConfigError(f"K must be >= 2, got {K}")
    if P < 1:
        raise ConfigError(f"P must be >= 1, got {P}")
    if batch_size is not None and P * K != batch_size:
        raise ConfigError(f"P x K = {P * K} does not equal batch size {batch_size}")

    groups = manifest.id_groups()
    names = list(groups)
    if len(names) < P:
        raise ConfigError(f"need {P} ids per batch, manifest has {len(names)}")

    rng = np.random.default_rng(rng_seed)
    chosen = rng.choice(len(names), size=P, replace=False)
    indices = []
    ids = []
    for c in chosen:
        members = groups[names[c]]
        picks = rng.choice(len(members), size=K, replace=len(members) < K)
        indices.extend(members[p] for p in picks)
        ids.extend([names[c]] * K)
    return Batch(np.array(indices, dtype=np.intp), ids)
