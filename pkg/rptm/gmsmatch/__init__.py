"""
RPTM GMS Matching Module
"""

from .matcher import Match, hamming_distance, match_brute_force, nearest_neighbors
from .gms import ROTATION_PATTERNS, MatchSet, gms_verify, match_count

__all__ = [
    'Match', 'hamming_distance', 'match_brute_force', 'nearest_neighbors',
    'ROTATION_PATTERNS', 'MatchSet', 'gms_verify', 'match_count',
]
