"""
RPTM Relation Preserving Triplet Mining
Positives come from the precomputed relational matrix over the whole
training set; negatives are the hardest different-id instance in the batch.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from ..config import TauPolicy
from ..errors import ConfigError, NoNegativeError, OutOfRangeError
from ..relational import RelationalMatrix, tau
from ..tabular import write_csv
from .sampler import Batch

PositiveSelector = Callable[[int], Optional[int]]


@dataclass(frozen=True)
class Triplet:
    """(anchor, positive, negative) image indices"""
    anchor: int
    positive: int
    negative: int


@dataclass(frozen=True)
class PositiveChoice:
    """Positive picked for one anchor and the threshold that picked it"""
    anchor: int
    positive: Optional[int]
    count: Optional[int]
    tau: Optional[float]


def _check_index(mx: RelationalMatrix, i: int) -> None:
    if not 0 <= i < mx.m:
        raise OutOfRangeError(f"image index {i} outside [0, {mx.m})")


def relational_indicator(mx: RelationalMatrix, i: int, j: int, tau_value: float) -> int:
    """1 when the pair's match count strictly exceeds tau"""
    _check_index(mx, i)
    _check_index(mx, j)
    return int(mx.counts[i, j] > tau_value)


def select_positive(
    mx: RelationalMatrix,
    anchor: int,
    policy: Union[TauPolicy, str] = TauPolicy.MEAN,
    tau_min: float = 10,
) -> Optional[int]:
    """Related image whose count is closest to tau, lower index on ties"""
    _check_index(mx, anchor)
    row = mx.row(anchor)
    threshold = tau(row, policy, tau_min)
    if threshold is None:
        return None
    candidates = np.nonzero(row > 0)[0]
    gaps = np.abs(row[candidates].astype(np.float64) - threshold)
    return int(candidates[np.argmin(gaps)])


def select_positive_random(
    ids: Sequence[str], anchor: int, rng: np.random.Generator
) -> Optional[int]:
    """Any other image of the anchor's id, uniformly (ablation baseline)"""
    candidates = [j for j, ident in enumerate(ids) if ident == ids[anchor] and j != anchor]
    if not candidates:
        return None
    return int(candidates[rng.integers(len(candidates))])


def select_negative_batch_hard(batch: Batch, anchor_pos: int) -> int:
    """Batch position of the nearest different-id embedding"""
    if batch.embeddings is None:
        raise ConfigError("batch-hard mining needs batch embeddings")
    if not 0 <= anchor_pos < len(batch):
        raise OutOfRangeError(f"batch position {anchor_pos} outside [0, {len(batch)})")
    anchor_id = batch.ids[anchor_pos]
    others = np.array([p for p, ident in enumerate(batch.ids) if ident != anchor_id],
                      dtype=np.intp)
    if others.size == 0:
        raise NoNegativeError(f"every batch instance shares id {anchor_id!r} with the anchor")
    dist = np.linalg.norm(batch.embeddings[others] - batch.embeddings[anchor_pos], axis=1)
    return int(others[np.argmin(dist)])


def mine_triplets(
    batch: Batch,
    mx: RelationalMatrix,
    policy: Union[TauPolicy, str] = TauPolicy.MEAN,
    tau_min: float = 10,
    positive_fn: Optional[PositiveSelector] = None,
) -> List[Triplet]:
    """One triplet per batch anchor that has a related positive"""
    choose = positive_fn or (lambda a: select_positive(mx, a, policy, tau_min))
    triplets = []
    for pos, anchor in enumerate(batch.indices):
        positive = choose(int(anchor))
        if positive is None:
            continue
        negative = batch.indices[select_negative_batch_hard(batch, pos)]
        triplets.append(Triplet(int(anchor), positive, int(negative)))
    return triplets


def positive_choices(
    mx: RelationalMatrix,
    policy: Union[TauPolicy, str] = TauPolicy.MEAN,
    tau_min: float = 10,
) -> List[PositiveChoice]:
    """Positive choice for every anchor of the matrix"""
    choices = []
    for anchor in range(mx.m):
        positive = select_positive(mx, anchor, policy, tau_min)
        if positive is None:
            choices.append(PositiveChoice(anchor, None, None, None))
        else:
            choices.append(PositiveChoice(
                anchor, positive, int(mx.counts[anchor, positive]),
                tau(mx.row(anchor), policy, tau_min),
            ))
    return choices


def write_positive_dump(choices: Sequence[PositiveChoice], path: Union[str, Path]) -> None:
    """'anchor,positive,count,tau' rows; anchors without a positive leave blanks"""
    def fmt(value):
        if value is None:
            return ""
        if isinstance(value, float):
            return f"{value:.6f}"
        return str(value)

    write_csv(path, ("anchor", "positive", "count", "tau"),
              ((c.anchor, fmt(c.positive), fmt(c.count), fmt(c.tau)) for c in choices))


def write_triplets(triplets: Sequence[Triplet], path: Union[str, Path]) -> None:
    write_csv(path, ("anchor", "positive", "negative"),
              ((t.anchor, t.positive, t.negative) for t in triplets))
