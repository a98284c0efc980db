"""
RPTM Triplet Mining Module
"""

from .sampler import Batch, sample_batch
from .miner import (
    PositiveChoice, Triplet, mine_triplets, positive_choices, relational_indicator,
    select_negative_batch_hard, select_positive, select_positive_random,
    write_positive_dump, write_triplets,
)

__all__ = [
    'Batch', 'sample_batch',
    'PositiveChoice', 'Triplet', 'mine_triplets', 'positive_choices', 'relational_indicator',
    'select_negative_batch_hard', 'select_positive', 'select_positive_random',
    'write_positive_dump', 'write_triplets',
]
