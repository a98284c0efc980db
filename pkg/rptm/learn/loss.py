"""
RPTM Losses
Triplet hinge, softmax cross-entropy and their weighted combination, with
exact analytic gradients through the embedding model.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..config import TrainConfig
from ..errors import ConfigError, DimensionError, OutOfRangeError
from ..mining import Batch, Triplet
from .model import EmbeddingModel, Gradients, forward_batch


@dataclass(frozen=True)
class LossReport:
    """Triplet cost, cross-entropy cost and their weighted total"""
    e_tri: float
    e_ent: float
    total: float
    active_triplets: int

    @classmethod
    def combine(cls, e_tri: float, e_ent: float, active: int,
                lambda_tri: float, lambda_ent: float) -> "LossReport":
        return cls(e_tri, e_ent, lambda_ent * e_ent + lambda_tri * e_tri, active)


def triplet_loss(e_a: np.ndarray, e_p: np.ndarray, e_n: np.ndarray, margin: float) -> float:
    """max(0, |a - p| - |a - n| + margin)"""
    e_a, e_p, e_n = (np.asarray(v, dtype=np.float64) for v in (e_a, e_p, e_n))
    if not (e_a.shape == e_p.shape == e_n.shape):
        raise DimensionError(f"embedding shapes differ: {e_a.shape}, {e_p.shape}, {e_n.shape}")
    if margin < 0:
        raise ConfigError(f"margin must be >= 0, got {margin}")
    d_ap = np.linalg.norm(e_a - e_p)
    d_an = np.linalg.norm(e_a - e_n)
    return float(max(0.0, d_ap - d_an + margin))


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(logits: np.ndarray, label: int) -> float:
    """-log softmax(logits)[label]"""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < logits.shape[-1]:
        raise OutOfRangeError(f"label {label} outside [0, {logits.shape[-1]})")
    return float(-_log_softmax(logits)[label])


def _layout(batch: Batch, triplets: Sequence[Triplet], inputs: np.ndarray):
    """Input rows: every batch position, then one row per triplet positive"""
    batch_x = batch.inputs if batch.inputs is not None else inputs[batch.indices]
    first: Dict[int, int] = {}
    for pos, index in enumerate(batch.indices):
        first.setdefault(int(index), pos)
    try:
        anchors = np.array([first[t.anchor] for t in triplets], dtype=np.intp)
        negatives = np.array([first[t.negative] for t in triplets], dtype=np.intp)
    except KeyError as e:
        raise ConfigError(f"triplet references image {e.args[0]} outside the batch") from e
    positives = len(batch) + np.arange(len(triplets), dtype=np.intp)
    pos_x = inputs[[t.positive for t in triplets]] if triplets else np.zeros((0, batch_x.shape[1]))
    return np.vstack([batch_x, pos_x]), anchors, positives, negatives


def loss_and_gradients(
    batch: Batch,
    triplets: Sequence[Triplet],
    labels: np.ndarray,
    model: EmbeddingModel,
    cfg: TrainConfig,
    inputs: np.ndarray,
    with_gradients: bool = True,
) -> Tuple[LossReport, Optional[Gradients]]:
    """Combined loss over one batch and, optionally, its gradient"""
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels)
    x, ra, rp, rn = _layout(batch, triplets, inputs)
    cache = forward_batch(model, x)
    emb = cache.embedding
    n_batch = len(batch)

    # Cross-entropy over the batch positions.
    y = labels[batch.indices]
    n_classes = model.dims[3]
    if np.any((y < 0) | (y >= n_classes)):
        raise OutOfRangeError(f"labels must lie in [0, {n_classes})")
    log_p = _log_softmax(cache.logits[:n_batch])
    e_ent = float(-log_p[np.arange(n_batch), y].sum())

    # Triplet hinge terms.
    diff_ap = emb[ra] - emb[rp]
    diff_an = emb[ra] - emb[rn]
    d_ap = np.linalg.norm(diff_ap, axis=1)
    d_an = np.linalg.norm(diff_an, axis=1)
    hinge = d_ap - d_an + cfg.margin
    active = hinge > 0
    e_tri = float(hinge[active].sum())

    report = LossReport.combine(e_tri, e_ent, int(active.sum()), cfg.lambda_tri, cfg.lambda_ent)
    if not with_gradients:
        return report, None

    d_logits = np.zeros_like(cache.logits)
    probs = np.exp(log_p)
    probs[np.arange(n_batch), y] -= 1.0
    d_logits[:n_batch] = cfg.lambda_ent * probs

    d_emb = d_logits @ model.Wc
    # Zero-norm guard: a vanished distance contributes no direction.
    unit_ap = np.divide(diff_ap, d_ap[:, None], out=np.zeros_like(diff_ap), where=d_ap[:, None] > 0)
    unit_an = np.divide(diff_an, d_an[:, None], out=np.zeros_like(diff_an), where=d_an[:, None] > 0)
    scale = cfg.lambda_tri * active[:, None]
    np.add.at(d_emb, ra, scale * (unit_ap - unit_an))
    np.add.at(d_emb, rp, -scale * unit_ap)
    np.add.at(d_emb, rn, scale * unit_an)

    d_hidden = d_emb @ model.W2
    d_pre = d_hidden * (cache.pre > 0)
    grads = Gradients(
        W1=d_pre.T @ x,
        b1=d_pre.sum(axis=0),
        W2=d_emb.T @ cache.hidden,
        b2=d_emb.sum(axis=0),
        Wc=d_logits.T @ emb,
        bc=d_logits.sum(axis=0),
    )
    return report, grads


def combined_loss(batch: Batch, triplets: Sequence[Triplet], labels: np.ndarray,
                  model: EmbeddingModel, cfg: TrainConfig, inputs: np.ndarray) -> LossReport:
    """lambda_ent * E_ent + lambda_tri * E_tri over one batch"""
    report, _ = loss_and_gradients(batch, triplets, labels, model, cfg, inputs,
                                   with_gradients=False)
    return report


def backward(batch: Batch, triplets: Sequence[Triplet], labels: np.ndarray,
             model: EmbeddingModel, cfg: TrainConfig, inputs: np.ndarray) -> Gradients:
    """Analytic gradient of the combined loss"""
    _, grads = loss_and_gradients(batch, triplets, labels, model, cfg, inputs)
    return grads
