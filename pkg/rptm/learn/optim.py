"""
RPTM Optimiser
SGD with momentum, weight decay on weights only, and a multi-step schedule.
"""

from typing import Tuple

from ..config import TrainConfig
from ..errors import ConfigError, DimensionError
from .model import WEIGHT_NAMES, EmbeddingModel, Gradients, ParamSet


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    """lr0 * factor ** (epoch // step)"""
    if epoch < 0:
        raise ConfigError(f"epoch must be >= 0, got {epoch}")
    return cfg.lr0 * cfg.lr_decay_factor ** (epoch // cfg.lr_step)


def sgd_step(
    model: EmbeddingModel,
    grads: Gradients,
    velocity: ParamSet,
    lr: float,
    momentum: float,
    weight_decay: float,
) -> Tuple[EmbeddingModel, ParamSet]:
    """One momentum step; returns the updated (model, velocity)"""
    if model.dims != grads.dims or model.dims != velocity.dims:
        raise DimensionError(
            f"model {model.dims}, gradient {grads.dims} and velocity {velocity.dims} differ"
        )
    new_params = {}
    new_velocity = {}
    for name, param in model.items():
        step = getattr(grads, name)
        if name in WEIGHT_NAMES:
            step = step + weight_decay * param
        v = momentum * getattr(velocity, name) + step
        new_velocity[name] = v
        new_params[name] = param - lr * v
    return EmbeddingModel(**new_params), ParamSet(**new_velocity)
