"""
RPTM Embedding Model
Two-layer ReLU embedding network with a linear classifier head.
"""

from dataclasses import dataclass, fields, replace
from typing import Dict, Iterator, NamedTuple, Tuple

import numpy as np

from ..errors import DimensionError

PARAM_NAMES = ("W1", "b1", "W2", "b2", "Wc", "bc")
WEIGHT_NAMES = ("W1", "W2", "Wc")


@dataclass(frozen=True, eq=False)
class ParamSet:
    """Parameter-shaped arrays in declaration order"""
    W1: np.ndarray   # (h, in)
    b1: np.ndarray   # (h,)
    W2: np.ndarray   # (d, h)
    b2: np.ndarray   # (d,)
    Wc: np.ndarray   # (C, d)
    bc: np.ndarray   # (C,)

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, np.asarray(getattr(self, f.name), dtype=np.float64))
        h, n_in = self.W1.shape
        d = self.W2.shape[0]
        c = self.Wc.shape[0]
        expected = {
            "W1": (h, n_in), "b1": (h,), "W2": (d, h), "b2": (d,), "Wc": (c, d), "bc": (c,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionError(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        """(in, h, d, C)"""
        return (self.W1.shape[1], self.W1.shape[0], self.W2.shape[0], self.Wc.shape[0])

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        for name in PARAM_NAMES:
            yield name, getattr(self, name)

    def as_dict(self) -> Dict[str, np.ndarray]:
        return dict(self.items())

    def replace(self, **arrays):
        return replace(self, **arrays)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for _, a in self.items())

    @classmethod
    def zeros_like(cls, other: "ParamSet"):
        return cls(**{name: np.zeros_like(a) for name, a in other.items()})


class EmbeddingModel(ParamSet):
    """f: R^in -> R^d plus a C-way classifier on the embedding"""


class Gradients(ParamSet):
    """Loss gradient for every model parameter"""


class ForwardCache(NamedTuple):
    pre: np.ndarray        # W1 x + b1
    hidden: np.ndarray     # relu(pre)
    embedding: np.ndarray
    logits: np.ndarray


def init_model(in_dim: int, hidden_dim: int, embed_dim: int, classes: int,
               seed: int = 0) -> EmbeddingModel:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation"""
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    return EmbeddingModel(
        W1=uniform((hidden_dim, in_dim), in_dim),
        b1=uniform((hidden_dim,), in_dim),
        W2=uniform((embed_dim, hidden_dim), hidden_dim),
        b2=uniform((embed_dim,), hidden_dim),
        Wc=uniform((classes, embed_dim), embed_dim),
        bc=uniform((classes,), embed_dim),
    )


def forward_batch(model: EmbeddingModel, x: np.ndarray) -> ForwardCache:
    """Forward pass over the rows of x"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dims[0]:
        raise DimensionError(f"expected inputs of shape (n, {model.dims[0]}), got {x.shape}")
    pre = x @ model.W1.T + model.b1
    hidden = np.maximum(pre, 0.0)
    embedding = hidden @ model.W2.T + model.b2
    logits = embedding @ model.Wc.T + model.bc
    return ForwardCache(pre, hidden, embedding, logits)


def forward(model: EmbeddingModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(embedding, logits) for one input vector"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dims[0],):
        raise DimensionError(f"expected input of dimension {model.dims[0]}, got shape {x.shape}")
    cache = forward_batch(model, x[np.newaxis, :])
    return cache.embedding[0], cache.logits[0]


def embed(model: EmbeddingModel, x: np.ndarray) -> np.ndarray:
    """Embeddings for the rows of x"""
    return forward_batch(model, x).embedding
