"""
RPTM Features Module
"""

from .keypoints import FAST_CIRCLE, Keypoint, detect_keypoints, segment_test
from .descriptor import (
    BinaryDescriptor, FeatureSet, PATCH_RADIUS, describe, extract, load_pair_table,
)

__all__ = [
    'FAST_CIRCLE', 'Keypoint', 'detect_keypoints', 'segment_test',
    'BinaryDescriptor', 'FeatureSet', 'PATCH_RADIUS', 'describe', 'extract', 'load_pair_table',
]
