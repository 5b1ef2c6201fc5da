"""Blockwise 8x8 DCT, quantization and pixel reconstruction.

The transform matches the JPEG convention: pixels are level-shifted by -128,
the type-II DCT uses the orthonormal scaling, and quantization rounds half
away from zero.
"""

import numpy as np

from ..errors import ShapeError

BLOCK = 8


def _dct_matrix() -> np.ndarray:
    u, x = np.meshgrid(np.arange(BLOCK), np.arange(BLOCK), indexing="ij")
    m = 0.5 * np.cos((2 * x + 1) * u * np.pi / 16.0)
    m[0, :] /= np.sqrt(2.0)
    return m


DCT_MATRIX = _dct_matrix()  # orthogonal: D @ D.T == I


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round halves away from zero (JPEG encoder convention, unlike np.round)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def split_blocks(plane: np.ndarray) -> np.ndarray:
    """(H, W) -> (H/8, W/8, 8, 8) without copying more than needed."""
    h, w = plane.shape
    if h % BLOCK or w % BLOCK:
        raise ShapeError(f"plane {h}x{w} not a multiple of {BLOCK}")
    return (plane.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK)
                 .transpose(0, 2, 1, 3))


def join_blocks(blocks: np.ndarray) -> np.ndarray:
    """(by, bx, 8, 8) -> (by*8, bx*8)."""
    by, bx = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(by * BLOCK, bx * BLOCK)


def block_dct(luma: np.ndarray) -> np.ndarray:
    """Per-block level-shifted DCT of an (H, W) luma plane; float output,
    shape (H/8, W/8, 8, 8)."""
    blocks = split_blocks(np.asarray(luma, dtype=np.float64)) - 128.0
    return DCT_MATRIX @ blocks @ DCT_MATRIX.T


def block_dct_quantize(luma: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """Quantized coefficients of an (H, W) luma plane as an (H, W) int array
    in block-tiled layout (each 8x8 tile holds one block, natural order)."""
    luma = np.asarray(luma)
    if luma.ndim != 2:
        raise ShapeError(f"expected 2-d luma plane, got shape {luma.shape}")
    qtable = np.asarray(qtable, dtype=np.float64).reshape(BLOCK, BLOCK)
    coeffs = round_half_away(block_dct(luma) / qtable)
    return join_blocks(coeffs).astype(np.int64)


def dequantize_to_pixels(blocks: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """Inverse of the encode path: (by, bx, 8, 8) quantized coefficients ->
    (by*8, bx*8) pixel plane, rounded and clipped to [0, 255]."""
    q = np.asarray(qtable, dtype=np.float64).reshape(BLOCK, BLOCK)
    spatial = DCT_MATRIX.T @ (np.asarray(blocks, dtype=np.float64) * q) @ DCT_MATRIX
    plane = join_blocks(spatial) + 128.0
    return np.clip(round_half_away(plane), 0, 255)


def rgb_to_luma(image: np.ndarray) -> np.ndarray:
    """BT.601 luma of an (H, W, 3) array, float in [0, 255].

    An (H, W) input is treated as already being luma.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"expected HxWx3 image, got shape {image.shape}")
    return (0.299 * image[..., 0] + 0.587 * image[..., 1]
            + 0.114 * image[..., 2])
