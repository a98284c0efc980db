"""
RPTM k-Reciprocal Re-ranking
Neighbour-set encoding with query expansion, Jaccard distance and a blend
d* = eta * d + (1 - eta) * d_J with the original distance.
"""

from typing import Dict

import numpy as np

from ..errors import ConfigError, DimensionError

RERANK_PRESETS: Dict[str, Dict[str, float]] = {
    "veri": {"k1": 60, "k2": 15, "eta": 0.2},
    "duke": {"k1": 20, "k2": 10, "eta": 0.2},
}


def k_reciprocal_neighbors(initial_rank: np.ndarray, i: int, k: int) -> np.ndarray:
    """Members of i's top k+1 whose own top k+1 contains i"""
    forward = initial_rank[i, :k + 1]
    backward = initial_rank[forward, :k + 1]
    return forward[np.any(backward == i, axis=1)]


def k_reciprocal_encoding(dist: np.ndarray, k1: int, k2: int) -> np.ndarray:
    """Gaussian-weighted neighbour-set vectors, one row per point"""
    n = len(dist)
    initial_rank = np.argsort(dist, axis=1, kind="stable")
    half = int(np.around(k1 / 2.0))
    encoding = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        reciprocal = k_reciprocal_neighbors(initial_rank, i, k1)
        expansion = reciprocal
        for candidate in reciprocal:
            candidate_set = k_reciprocal_neighbors(initial_rank, candidate, half)
            if len(np.intersect1d(candidate_set, reciprocal)) > 2.0 / 3.0 * len(candidate_set):
                expansion = np.append(expansion, candidate_set)
        expansion = np.unique(expansion)
        if expansion.size == 0:
            # Exact duplicates can crowd i out of its own top k1 + 1.
            expansion = np.array([i])
        weight = np.exp(-dist[i, expansion])
        encoding[i, expansion] = weight / weight.sum()

    if k2 > 1:
        encoding = np.stack([encoding[initial_rank[i, :k2]].mean(axis=0) for i in range(n)])
    return encoding


def jaccard_distance(query_encoding: np.ndarray, encoding: np.ndarray) -> np.ndarray:
    """1 - sum(min) / sum(max) between every query row and every encoding row"""
    query_encoding = np.atleast_2d(query_encoding)
    out = np.empty((len(query_encoding), len(encoding)), dtype=np.float64)
    for i, v in enumerate(query_encoding):
        overlap = np.minimum(v, encoding).sum(axis=1)
        union = np.maximum(v, encoding).sum(axis=1)
        out[i] = 1.0 - np.divide(overlap, union, out=np.zeros_like(overlap), where=union > 0)
    return out


def normalized_distance(all_dists: np.ndarray) -> np.ndarray:
    """Squared distances, each point's row scaled by its largest entry"""
    squared = np.square(np.asarray(all_dists, dtype=np.float64))
    col_max = squared.max(axis=0)
    col_max[col_max == 0] = 1.0
    return (squared / col_max).T


def k_reciprocal_rerank(
    all_dists: np.ndarray,
    num_query: int,
    k1: int = 60,
    k2: int = 15,
    eta: float = 0.2,
) -> np.ndarray:
    """Revised q x g distances from the (q+g) x (q+g) matrix over query then gallery"""
    all_dists = np.asarray(all_dists, dtype=np.float64)
    if all_dists.ndim != 2 or all_dists.shape[0] != all_dists.shape[1]:
        raise DimensionError(f"expected a square distance matrix, got {all_dists.shape}")
    if not 0 < num_query < len(all_dists):
        raise DimensionError(f"num_query {num_query} must lie in (0, {len(all_dists)})")
    if not k1 >= k2 >= 1:
        raise ConfigError(f"need k1 >= k2 >= 1, got k1={k1}, k2={k2}")
    if not 0.0 <= eta <= 1.0:
        raise ConfigError(f"eta must lie in [0, 1], got {eta}")

    dist = normalized_distance(all_dists)
    encoding = k_reciprocal_encoding(dist, k1, k2)
    d_j = jaccard_distance(encoding[:num_query], encoding)
    final = eta * dist[:num_query] + (1.0 - eta) * d_j
    return final[:, num_query:]
