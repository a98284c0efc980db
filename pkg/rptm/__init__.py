"""
RPTM
Relation preserving triplet mining at desk scale.

Feature-match-guided relational matrices over labeled image sets, triplet
mining that respects natural appearance groups, a small embedding model
trained under the combined triplet + cross-entropy loss, and retrieval
evaluation with k-reciprocal re-ranking.
"""

__version__ = "0.1.0"
__author__ = "RPTM Development Team"
__license__ = "MIT"

from .errors import RPTMError

__all__ = ['RPTMError', '__version__']
