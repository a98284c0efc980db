"""
RPTM Embedding Files
Binary vectors (magic "RPTMEMB", u16 version, u32 count, u32 dim, f32 data),
the "index,id,split" sidecar and the "metric,value" output.
"""

import struct
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from ..errors import CorruptError, FormatError, IoError
from ..tabular import read_csv, write_csv

EMBEDDING_MAGIC = b"RPTMEMB"
EMBEDDING_VERSION = 1
SPLIT_HEADER = ("index", "id", "split")
SPLITS = ("query", "gallery")
_HEADER = struct.Struct("<7sHII")


def save_embeddings(vectors: np.ndarray, path: Union[str, Path]) -> None:
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    count, dim = vectors.shape
    blob = (_HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION, count, dim)
            + vectors.astype("<f4").tobytes())
    try:
        Path(path).write_bytes(blob)
    except OSError as e:
        raise IoError(f"cannot write embeddings {path}: {e.strerror or e}") from e


def load_embeddings(path: Union[str, Path]) -> np.ndarray:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise IoError(f"cannot read embeddings {path}: {e.strerror or e}") from e
    if len(blob) < _HEADER.size:
        raise CorruptError(f"{path}: truncated header")
    magic, version, count, dim = _HEADER.unpack_from(blob)
    if magic != EMBEDDING_MAGIC:
        raise CorruptError(f"{path}: bad magic {magic!r}")
    if version != EMBEDDING_VERSION:
        raise CorruptError(f"{path}: unsupported version {version}")
    if len(blob) != _HEADER.size + 4 * count * dim:
        expected = _HEADER.size + 4 * count * dim
        raise CorruptError(f"{path}: size {len(blob)} bytes, expected {expected}")
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    return data.reshape(count, dim).astype(np.float64)


def write_split(ids: Sequence[str], splits: Sequence[str], path: Union[str, Path]) -> None:
    """Sidecar rows 'index,id,split'"""
    write_csv(path, SPLIT_HEADER, ((i, ident, s) for i, (ident, s) in enumerate(zip(ids, splits))))


def read_split(path: Union[str, Path]) -> Tuple[List[str], List[str]]:
    """(ids, splits) indexed by image index"""
    rows = read_csv(path, SPLIT_HEADER)
    ids: List[str] = [""] * len(rows)
    splits: List[str] = [""] * len(rows)
    for row in rows:
        try:
            index = int(row[0])
        except ValueError:
            raise FormatError(f"bad index {row[0]!r}", filename=str(path)) from None
        if not 0 <= index < len(rows) or splits[index]:
            raise FormatError(f"index {index} out of range or repeated", filename=str(path))
        if row[2] not in SPLITS:
            raise FormatError(f"split must be 'query' or 'gallery', got {row[2]!r}",
                              filename=str(path))
        ids[index], splits[index] = row[1], row[2]
    return ids, splits


def write_metrics(metrics: Dict[str, float], path: Union[str, Path]) -> None:
    write_csv(path, ("metric", "value"),
              ((name, f"{value:.6f}") for name, value in metrics.items()))
