"""
RPTM Model Checkpoints
Binary layout: magic "RPTMMODL", u16 version, u32 dims (in, h, d, C),
u64 manifest hash, then every parameter as little-endian f64 in
declaration order.
"""

import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ..errors import CorruptError, IoError
from .model import PARAM_NAMES, EmbeddingModel

CHECKPOINT_MAGIC = b"RPTMMODL"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<8sH4IQ")


def _shapes(n_in: int, h: int, d: int, c: int):
    return {"W1": (h, n_in), "b1": (h,), "W2": (d, h), "b2": (d,), "Wc": (c, d), "bc": (c,)}


def save_checkpoint(model: EmbeddingModel, path: Union[str, Path], manifest_hash: int = 0) -> None:
    blob = [_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, *model.dims, manifest_hash)]
    blob.extend(array.astype("<f8").tobytes() for _, array in model.items())
    try:
        Path(path).write_bytes(b"".join(blob))
    except OSError as e:
        raise IoError(f"cannot write checkpoint {path}: {e.strerror or e}") from e


def load_checkpoint(path: Union[str, Path]) -> Tuple[EmbeddingModel, int]:
    """(model, manifest hash) from a checkpoint file"""
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise IoError(f"cannot read checkpoint {path}: {e.strerror or e}") from e

    if len(blob) < _HEADER.size:
        raise CorruptError(f"{path}: truncated header")
    magic, version, n_in, h, d, c, manifest_hash = _HEADER.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise CorruptError(f"{path}: bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CorruptError(f"{path}: unsupported version {version}")
    shapes = _shapes(n_in, h, d, c)
    total = sum(int(np.prod(s)) for s in shapes.values())
    if len(blob) != _HEADER.size + 8 * total:
        raise CorruptError(
            f"{path}: size {len(blob)} bytes, expected {_HEADER.size + 8 * total}"
        )

    values = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    params = {}
    offset = 0
    for name in PARAM_NAMES:
        size = int(np.prod(shapes[name]))
        params[name] = values[offset:offset + size].reshape(shapes[name]).astype(np.float64)
        offset += size
    model = EmbeddingModel(**params)
    if not model.is_finite():
        raise CorruptError(f"{path}: non-finite parameters")
    return model, manifest_hash
