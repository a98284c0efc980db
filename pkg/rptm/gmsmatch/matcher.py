"""
RPTM Brute-Force Matcher
Exhaustive Hamming nearest-neighbour search between two feature sets.
"""

from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from ..features import BinaryDescriptor, FeatureSet

# Rows of A matched per block; bounds the (block, |B|) distance matrix.
BLOCK_ROWS = 1024


@dataclass(frozen=True)
class Match:
    """Nearest-neighbour hypothesis from image A to image B"""
    query_idx: int
    train_idx: int
    distance: int


def _as_bytes(d: Union[BinaryDescriptor, np.ndarray, bytes]) -> np.ndarray:
    if isinstance(d, BinaryDescriptor):
        return d.to_array()
    if isinstance(d, (bytes, bytearray)):
        return np.frombuffer(bytes(d), dtype=np.uint8)
    return np.asarray(d, dtype=np.uint8)


def hamming_distance(a: BinaryDescriptor, b: BinaryDescriptor) -> int:
    """Number of differing bits"""
    return int(np.unpackbits(np.bitwise_xor(_as_bytes(a), _as_bytes(b))).sum())


def nearest_neighbors(a: FeatureSet, b: FeatureSet) -> Tuple[np.ndarray, np.ndarray]:
    """Train index and distance of the nearest B descriptor for every A descriptor.

    Ties go to the lowest train index.
    """
    if len(a) == 0 or len(b) == 0:
        return np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.int64)

    # Bit vectors as float32: every distance is an integer <= 256, so exact.
    bits_b = b.bit_matrix.astype(np.float32)
    not_b = 1.0 - bits_b
    bits_a_all = a.bit_matrix.astype(np.float32)

    train = np.empty(len(a), dtype=np.intp)
    dist = np.empty(len(a), dtype=np.int64)
    for start in range(0, len(a), BLOCK_ROWS):
        bits_a = bits_a_all[start:start + BLOCK_ROWS]
        d = bits_a @ not_b.T + (1.0 - bits_a) @ bits_b.T
        best = np.argmin(d, axis=1)
        train[start:start + len(bits_a)] = best
        dist[start:start + len(bits_a)] = np.rint(d[np.arange(len(bits_a)), best]).astype(np.int64)
    return train, dist


def match_brute_force(a: FeatureSet, b: FeatureSet) -> List[Match]:
    """One nearest-neighbour match per A keypoint, no ratio test"""
    train, dist = nearest_neighbors(a, b)
    return [Match(i, int(t), int(d)) for i, (t, d) in enumerate(zip(train, dist))]
