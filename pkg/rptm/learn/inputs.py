"""
RPTM Image Inputs
Fixed per-image descriptor vectors fed to the embedding model.
"""

import logging
from typing import Tuple

import numpy as np

from ..errors import DimensionError
from ..imageio import GrayImage, load_image, resize_bilinear
from ..relational import DatasetManifest

logger = logging.getLogger(__name__)

GRID_CELLS = 4
INTENSITY_BINS = 4
INPUT_DIM = GRID_CELLS * GRID_CELLS * INTENSITY_BINS


def pooled_descriptor(img: GrayImage, size: Tuple[int, int] = (224, 224)) -> np.ndarray:
    """4x4 grid of 4-bin intensity histograms, each cell normalised to sum 1"""
    resized = resize_bilinear(img, size[0], size[1]).data
    bins = np.minimum(resized // (256 // INTENSITY_BINS), INTENSITY_BINS - 1)
    rows = np.array_split(np.arange(size[1]), GRID_CELLS)
    cols = np.array_split(np.arange(size[0]), GRID_CELLS)
    out = np.zeros((GRID_CELLS, GRID_CELLS, INTENSITY_BINS), dtype=np.float64)
    for r, ys in enumerate(rows):
        for c, xs in enumerate(cols):
            cell = bins[ys[0]:ys[-1] + 1, xs[0]:xs[-1] + 1]
            hist = np.bincount(cell.ravel(), minlength=INTENSITY_BINS).astype(np.float64)
            out[r, c] = hist / hist.sum()
    return out.ravel()


def flip_descriptor_grid(x: np.ndarray) -> np.ndarray:
    """Horizontal flip: reverse the column order of the cell grid"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != INPUT_DIM:
        raise DimensionError(f"expected {INPUT_DIM}-dim grid descriptors, got {x.shape[-1]}")
    grid = x.reshape(x.shape[:-1] + (GRID_CELLS, GRID_CELLS, INTENSITY_BINS))
    return grid[..., ::-1, :].reshape(x.shape).copy()


def image_inputs(manifest: DatasetManifest, size: Tuple[int, int] = (224, 224)) -> np.ndarray:
    """(m, 64) pooled descriptors for every manifest image"""
    rows = []
    for i in range(len(manifest)):
        rows.append(pooled_descriptor(load_image(manifest.resolve(i)), size))
    logger.debug("computed %d pooled descriptors", len(rows))
    return np.vstack(rows) if rows else np.zeros((0, INPUT_DIM))
