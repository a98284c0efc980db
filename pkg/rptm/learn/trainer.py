"""
RPTM Training Loop
PK batches, relation preserving triplets, combined loss and SGD.
"""

import logging
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import MiningConfig, TauPolicy, TrainConfig
from ..errors import ConfigError, DimensionError, HashMismatchError, RPTMError
from ..mining import (
    Batch, Triplet, mine_triplets, sample_batch, select_positive, select_positive_random,
)
from ..relational import DatasetManifest, RelationalMatrix
from ..tabular import write_csv
from .inputs import flip_descriptor_grid, image_inputs
from .loss import LossReport, loss_and_gradients
from .model import EmbeddingModel, ParamSet, embed, init_model
from .optim import lr_at_epoch, sgd_step

logger = logging.getLogger(__name__)

RANDOM_POLICY = "random"
HISTORY_HEADER = ("epoch", "e_tri", "e_ent", "total", "active_triplets", "lr")


@dataclass(frozen=True)
class EpochReport(LossReport):
    """Batch-averaged losses of one epoch"""
    epoch: int = 0
    lr: float = 0.0


def _batch_seed(seed: int, epoch: int, batch: int) -> int:
    return int(np.random.SeedSequence([seed, epoch, batch]).generate_state(1)[0])


def _epoch_batches(
    manifest: DatasetManifest, cfg: TrainConfig, epoch: int
) -> Iterator[Tuple[int, Batch]]:
    """(seed, batch) pairs of one epoch; the schedule depends only on the config"""
    for b in range(max(1, len(manifest) // cfg.batch_size)):
        seed = _batch_seed(cfg.seed, epoch, b)
        yield seed, sample_batch(manifest, seed, cfg.batch_p, cfg.batch_k, cfg.batch_size)


class _PositiveTable:
    """Positive per anchor; fixed for a (matrix, policy) pair"""

    def __init__(self, matrix: RelationalMatrix, policy: TauPolicy, tau_min: float):
        self.matrix = matrix
        self.policy = policy
        self.tau_min = tau_min
        self._cache = {}

    def __call__(self, anchor: int) -> Optional[int]:
        if anchor not in self._cache:
            self._cache[anchor] = select_positive(self.matrix, anchor, self.policy, self.tau_min)
        return self._cache[anchor]


def train(
    manifest: DatasetManifest,
    matrix: RelationalMatrix,
    cfg: Optional[TrainConfig] = None,
    mining_cfg: Optional[MiningConfig] = None,
    inputs: Optional[np.ndarray] = None,
    positive_policy: Optional[str] = None,
) -> Tuple[EmbeddingModel, List[EpochReport]]:
    """Train the embedding model; returns it with one report per epoch.

    positive_policy overrides the mining policy; "random" picks any other
    image of the anchor's id instead of consulting the matrix.
    """
    cfg = cfg or TrainConfig()
    mining_cfg = mining_cfg or MiningConfig()
    expected = manifest.content_hash()
    if matrix.manifest_hash != expected:
        raise HashMismatchError(expected, matrix.manifest_hash, "relational matrix")
    if matrix.m != len(manifest):
        raise DimensionError(f"matrix covers {matrix.m} images, manifest has {len(manifest)}")
    manifest.validate(min_per_id=2)

    if inputs is None:
        inputs = image_inputs(manifest)
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or len(inputs) != len(manifest):
        raise DimensionError(f"inputs must be ({len(manifest)}, n), got {inputs.shape}")

    labels, names = manifest.class_labels()
    ids = manifest.ids
    model = init_model(inputs.shape[1], cfg.hidden_dim, cfg.embed_dim, len(names), cfg.seed)
    velocity = ParamSet.zeros_like(model)

    policy = positive_policy or mining_cfg.policy
    positives = None
    if policy != RANDOM_POLICY:
        positives = _PositiveTable(matrix, TauPolicy(policy), mining_cfg.tau_min)

    n_batches = max(1, len(manifest) // cfg.batch_size)
    history: List[EpochReport] = []
    for epoch in range(cfg.epochs):
        lr = lr_at_epoch(cfg, epoch)
        e_tri = e_ent = 0.0
        active = 0
        for seed, batch in _epoch_batches(manifest, cfg, epoch):
            rng = np.random.default_rng(seed + 1)
            batch.inputs = inputs[batch.indices]
            if cfg.hflip:
                flips = rng.random(len(batch)) < 0.5
                batch.inputs[flips] = flip_descriptor_grid(batch.inputs[flips])
            batch = batch.with_embeddings(embed(model, batch.inputs))

            choose = positives or partial(select_positive_random, ids, rng=rng)
            triplets = mine_triplets(batch, matrix, positive_fn=choose)

            report, grads = loss_and_gradients(batch, triplets, labels, model, cfg, inputs)
            model, velocity = sgd_step(model, grads, velocity, lr, cfg.momentum, cfg.weight_decay)
            e_tri += report.e_tri
            e_ent += report.e_ent
            active += report.active_triplets

        if not model.is_finite():
            raise RPTMError(f"parameters became non-finite in epoch {epoch}; lower lr0")
        summary = LossReport.combine(e_tri / n_batches, e_ent / n_batches, active,
                                     cfg.lambda_tri, cfg.lambda_ent)
        record = EpochReport(summary.e_tri, summary.e_ent, summary.total,
                             summary.active_triplets, epoch=epoch, lr=lr)
        history.append(record)
        logger.info("epoch %d/%d e_tri=%.4f e_ent=%.4f total=%.4f active=%d lr=%.2e",
                    epoch + 1, cfg.epochs, record.e_tri, record.e_ent, record.total,
                    record.active_triplets, lr)
    return model, history


def epoch_triplets(
    manifest: DatasetManifest,
    matrix: RelationalMatrix,
    vectors: np.ndarray,
    cfg: Optional[TrainConfig] = None,
    mining_cfg: Optional[MiningConfig] = None,
    epoch: int = 0,
) -> List[Triplet]:
    """Triplets of one training epoch's batches, negatives mined on fixed vectors"""
    cfg = cfg or TrainConfig()
    mining_cfg = mining_cfg or MiningConfig()
    if matrix.manifest_hash != manifest.content_hash():
        raise HashMismatchError(manifest.content_hash(), matrix.manifest_hash, "relational matrix")
    vectors = np.asarray(vectors, dtype=np.float64)
    if len(vectors) != len(manifest) or matrix.m != len(manifest):
        raise DimensionError(
            f"manifest has {len(manifest)} images, vectors {len(vectors)}, matrix {matrix.m}"
        )
    positives = _PositiveTable(matrix, TauPolicy(mining_cfg.policy), mining_cfg.tau_min)
    triplets: List[Triplet] = []
    for _, batch in _epoch_batches(manifest, cfg, epoch):
        batch = batch.with_embeddings(vectors[batch.indices])
        triplets.extend(mine_triplets(batch, matrix, positive_fn=positives))
    return triplets


def window_means(history: Sequence[LossReport], window: int = 5) -> List[float]:
    """Mean total loss over consecutive non-overlapping windows"""
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    totals = [r.total for r in history]
    return [float(np.mean(totals[i:i + window]))
            for i in range(0, len(totals) - window + 1, window)]


def windowed_descent(history: Sequence[LossReport], window: int = 5) -> bool:
    """True when every window's mean total is below the previous one"""
    means = window_means(history, window)
    return all(later < earlier for earlier, later in zip(means, means[1:]))


def write_history(history: Sequence[EpochReport], path: Union[str, Path]) -> None:
    """Loss history CSV, one row per epoch"""
    write_csv(path, HISTORY_HEADER, (
        (r.epoch, repr(r.e_tri), repr(r.e_ent), repr(r.total), r.active_triplets, repr(r.lr))
        for r in history
    ))
