"""Baseline JPEG parsing, encoding and coefficient-plane extraction."""

from .dct import block_dct, block_dct_quantize, dequantize_to_pixels, rgb_to_luma
from .encoder import Recompressed, decode_pixels, encode_jpeg, recompress
from .misalign import AlignmentLabel, alignment_label, apply_geometry, misalign
from .parser import JpegImage, parse_jpeg
from .planes import (CoefficientPlanes, coefficient_planes, grid_crop_box,
                     planes_from_pixels, read_dctp, write_dctp)
from .tables import BASE_LUMA_QTABLE, ZIGZAG, scaled_qtable

__all__ = [
    "AlignmentLabel", "BASE_LUMA_QTABLE", "CoefficientPlanes", "JpegImage",
    "Recompressed", "ZIGZAG", "alignment_label", "apply_geometry",
    "block_dct", "block_dct_quantize", "coefficient_planes", "decode_pixels",
    "dequantize_to_pixels", "encode_jpeg", "grid_crop_box", "misalign",
    "parse_jpeg", "planes_from_pixels", "read_dctp", "recompress",
    "rgb_to_luma", "scaled_qtable",
]
