"""
Shared fixtures and builders for the RPTM test suite.
"""

import logging
from pathlib import Path

import numpy as np
import pytest

from rptm.features import FeatureSet, Keypoint
from rptm.imageio import GrayImage
from rptm.relational import RelationalMatrix

DATA_DIR = Path(__file__).parent / "data"


def noise_image(seed: int = 0, width: int = 224, height: int = 224) -> GrayImage:
    rng = np.random.default_rng(seed)
    return GrayImage.from_array(rng.integers(0, 256, size=(height, width), dtype=np.uint8))


def square_image(size: int = 64, lo: int = 20, hi: int = 43) -> GrayImage:
    """White square covering [lo, hi] x [lo, hi] on black"""
    data = np.zeros((size, size), dtype=np.uint8)
    data[lo:hi + 1, lo:hi + 1] = 255
    return GrayImage.from_array(data)


def dotted_board(size: int = 224, cell: int = 16, square: int = 8) -> GrayImage:
    """Isolated white squares on a regular grid"""
    data = np.zeros((size, size), dtype=np.uint8)
    offset = (cell - square) // 2
    for y in range(offset, size - square, cell):
        for x in range(offset, size - square, cell):
            data[y:y + square, x:x + square] = 255
    return GrayImage.from_array(data)


def checkerboard(size: int = 224, cell: int = 16) -> GrayImage:
    ys, xs = np.mgrid[0:size, 0:size]
    return GrayImage.from_array((((xs // cell) + (ys // cell)) % 2 * 255).astype(np.uint8))


def make_features(descriptors, points=None, dims=(224, 224)) -> FeatureSet:
    """FeatureSet from raw (n, 32) descriptors at the given (x, y) points"""
    descriptors = np.asarray(descriptors, dtype=np.uint8).reshape(-1, 32)
    if points is None:
        points = np.zeros((len(descriptors), 2))
    kps = tuple(Keypoint(float(x), float(y), 1.0, 0.0, 0) for x, y in points)
    return FeatureSet(kps, descriptors, dims)


def symmetric_matrix(counts, manifest_hash: int = 0) -> RelationalMatrix:
    counts = np.asarray(counts, dtype=np.int64)
    counts = np.maximum(counts, counts.T)
    np.fill_diagonal(counts, 0)
    return RelationalMatrix(len(counts), counts, manifest_hash)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture(autouse=True)
def reset_package_logger():
    """Undo console logging set up by CLI runs"""
    yield
    logger = logging.getLogger("rptm")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)
    logger.propagate = True
