"""
RPTM Evaluation Module
"""

from .metrics import (
    RankingResult, average_precision, cmc, evaluate, mean_average_precision,
    pairwise_distances, rank,
)
from .rerank import (
    RERANK_PRESETS, jaccard_distance, k_reciprocal_encoding, k_reciprocal_neighbors,
    k_reciprocal_rerank, normalized_distance,
)
from .embeddings import (
    load_embeddings, read_split, save_embeddings, write_metrics, write_split,
)

__all__ = [
    'RankingResult', 'average_precision', 'cmc', 'evaluate', 'mean_average_precision',
    'pairwise_distances', 'rank',
    'RERANK_PRESETS', 'jaccard_distance', 'k_reciprocal_encoding', 'k_reciprocal_neighbors',
    'k_reciprocal_rerank', 'normalized_distance',
    'load_embeddings', 'read_split', 'save_embeddings', 'write_metrics', 'write_split',
]
