"""
RPTM Relational Matrix Module
"""

from .manifest import DatasetManifest, ManifestEntry
from .matrix import (
    MATRIX_MAGIC, MATRIX_VERSION, RelationalMatrix, build_relational_matrix,
    load_matrix, same_id_pairs, save_matrix, tau,
)

__all__ = [
    'DatasetManifest', 'ManifestEntry',
    'MATRIX_MAGIC', 'MATRIX_VERSION', 'RelationalMatrix', 'build_relational_matrix',
    'load_matrix', 'same_id_pairs', 'save_matrix', 'tau',
]
