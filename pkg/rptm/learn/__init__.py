"""
RPTM Learning Module
"""

from .model import (
    EmbeddingModel, ForwardCache, Gradients, ParamSet, embed, forward, forward_batch, init_model,
)
from .loss import (
    LossReport, backward, combined_loss, cross_entropy, loss_and_gradients, triplet_loss,
)
from .optim import lr_at_epoch, sgd_step
from .inputs import INPUT_DIM, flip_descriptor_grid, image_inputs, pooled_descriptor
from .trainer import (
    EpochReport, epoch_triplets, train, window_means, windowed_descent, write_history,
)
from .checkpoint import CHECKPOINT_MAGIC, load_checkpoint, save_checkpoint

__all__ = [
    'EmbeddingModel', 'ForwardCache', 'Gradients', 'ParamSet', 'embed', 'forward',
    'forward_batch', 'init_model',
    'LossReport', 'backward', 'combined_loss', 'cross_entropy', 'loss_and_gradients',
    'triplet_loss',
    'lr_at_epoch', 'sgd_step',
    'INPUT_DIM', 'flip_descriptor_grid', 'image_inputs', 'pooled_descriptor',
    'EpochReport', 'epoch_triplets', 'train', 'window_means', 'windowed_descent', 'write_history',
    'CHECKPOINT_MAGIC', 'load_checkpoint', 'save_checkpoint',
]
