"""
RPTM Synthetic Data Module
"""

from .images import (
    SynthDataset, SynthSpec, generate_dataset, id_name, layout, read_poses, render_image,
    render_texture, write_poses,
)
from .clusters import ClusterSpec, embedding_manifest, generate_embeddings, simulated_matrix

__all__ = [
    'SynthDataset', 'SynthSpec', 'generate_dataset', 'id_name', 'layout', 'read_poses',
    'render_image', 'render_texture', 'write_poses',
    'ClusterSpec', 'embedding_manifest', 'generate_embeddings', 'simulated_matrix',
]
