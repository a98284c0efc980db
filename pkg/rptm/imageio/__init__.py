"""
RPTM Image I/O Module
"""

from .image import GrayImage, MAX_DIMENSION, build_pyramid, resize_bilinear
from .pnm import PnmLexer, load_image, save_image

__all__ = [
    'GrayImage', 'MAX_DIMENSION', 'build_pyramid', 'resize_bilinear',
    'PnmLexer', 'load_image', 'save_image',
]
