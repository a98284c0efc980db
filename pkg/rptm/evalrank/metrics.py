"""
RPTM Retrieval Metrics
Euclidean distances, per-query gallery rankings, CMC and mAP.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import ConfigError, DimensionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RankingResult:
    """Per-query gallery order and same-id flags, junk entries removed"""
    orders: List[np.ndarray]
    flags: List[np.ndarray]

    @property
    def query_count(self) -> int:
        return len(self.orders)

    def match_counts(self) -> np.ndarray:
        return np.array([int(f.sum()) for f in self.flags], dtype=np.intp)

    def _require_matches(self) -> None:
        missing = np.nonzero(self.match_counts() == 0)[0]
        if missing.size:
            raise ConfigError(
                f"query {int(missing[0])} has no gallery match; filter such queries first"
            )


def pairwise_distances(queries: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    """q x g Euclidean distance matrix"""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    gallery = np.atleast_2d(np.asarray(gallery, dtype=np.float64))
    if queries.shape[1] != gallery.shape[1]:
        raise DimensionError(
            f"query dimension {queries.shape[1]} differs from gallery dimension {gallery.shape[1]}"
        )
    return cdist(queries, gallery, "euclidean")


def rank(
    dists: np.ndarray,
    query_ids: Sequence,
    gallery_ids: Sequence,
    exclude: Optional[np.ndarray] = None,
) -> RankingResult:
    """Sort each query's gallery by ascending distance, lower index first on ties.

    exclude is an optional q x g mask of junk entries dropped from the ranking.
    """
    dists = np.asarray(dists, dtype=np.float64)
    query_ids = np.asarray(query_ids)
    gallery_ids = np.asarray(gallery_ids)
    if dists.shape != (len(query_ids), len(gallery_ids)):
        raise DimensionError(
            f"distance matrix {dists.shape} does not match "
            f"{len(query_ids)} queries x {len(gallery_ids)} gallery"
        )
    if exclude is not None and np.shape(exclude) != dists.shape:
        raise DimensionError(f"exclusion mask {np.shape(exclude)} does not match {dists.shape}")

    order = np.argsort(dists, axis=1, kind="stable")
    orders, flags = [], []
    for i, row in enumerate(order):
        if exclude is not None:
            row = row[~np.asarray(exclude[i], dtype=bool)[row]]
        orders.append(row)
        flags.append(gallery_ids[row] == query_ids[i])
    return RankingResult(orders, flags)


def cmc(result: RankingResult, k: int) -> float:
    """Fraction of queries with a match in the top k"""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    result._require_matches()
    if result.query_count == 0:
        return 0.0
    hits = [bool(f[:k].any()) for f in result.flags]
    return float(np.mean(hits))


def average_precision(flags: np.ndarray) -> float:
    """Mean of the precision at every match position"""
    positions = np.nonzero(flags)[0] + 1
    if positions.size == 0:
        return 0.0
    return float(np.mean(np.arange(1, positions.size + 1) / positions))


def mean_average_precision(result: RankingResult) -> float:
    result._require_matches()
    if result.query_count == 0:
        return 0.0
    return float(np.mean([average_precision(f) for f in result.flags]))


def evaluate(
    dists: np.ndarray,
    query_ids: Sequence,
    gallery_ids: Sequence,
    ranks: Sequence[int] = (1, 5, 10),
    exclude: Optional[np.ndarray] = None,
) -> Dict[str, float]:
    """mAP and cmc@k; queries without any gallery match are dropped"""
    result = rank(dists, query_ids, gallery_ids, exclude)
    keep = result.match_counts() > 0
    if not keep.all():
        logger.warning("dropping %d of %d queries with no gallery match",
                       int((~keep).sum()), result.query_count)
    if not keep.any():
        raise ConfigError("no query has a gallery match")
    result = RankingResult([o for o, k in zip(result.orders, keep) if k],
                           [f for f, k in zip(result.flags, keep) if k])
    metrics = {"mAP": mean_average_precision(result)}
    for k in ranks:
        metrics[f"cmc@{k}"] = cmc(result, k)
    return metrics
