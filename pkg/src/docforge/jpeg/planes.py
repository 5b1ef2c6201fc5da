"""Block-tiled coefficient planes and their binary container.

Layout: every 8x8 tile of ``dct_plane`` holds one block's 64 quantized
coefficients in row-major natural order; ``qt_plane`` tiles the luma
quantization table over the image. Stored coefficients are signed (the DC
range is +-1024 after level shift) even though forensic papers sometimes
write the plane as non-negative.
"""

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import MalformedStream, ShapeError
from .dct import block_dct_quantize, join_blocks
from .parser import JpegImage

DCTP_MAGIC = b"DCTP"


@dataclass
class CoefficientPlanes:
    dct_plane: np.ndarray  # (H, W) int16
    qt_plane: np.ndarray   # (H, W) uint8

    @property
    def shape(self) -> tuple[int, int]:
        return self.dct_plane.shape

    def crop(self, top: int, left: int, height: int, width: int) -> "CoefficientPlanes":
        """Grid-anchored crop; offsets must be multiples of 8 so tiles keep
        matching the compression blocks."""
        if top % 8 or left % 8:
            raise ShapeError("plane crops must be 8-aligned")
        return CoefficientPlanes(
            self.dct_plane[top:top + height, left:left + width].copy(),
            self.qt_plane[top:top + height, left:left + width].copy())


def grid_crop_box(height: int, width: int, multiple: int = 8) -> tuple[int, int]:
    """Largest (h, w) <= (height, width) that are multiples of ``multiple``,
    anchored at the origin so the 8x8 compression grid is preserved."""
    return (height // multiple) * multiple, (width // multiple) * multiple


def coefficient_planes(img: JpegImage) -> CoefficientPlanes:
    """Planes from parsed per-block coefficients. Non-multiple-of-8 images
    are cropped at the grid origin to whole blocks."""
    h8, w8 = grid_crop_box(img.height, img.width)
    blocks = img.quantized_luma_blocks[:h8 // 8, :w8 // 8]
    dct_plane = join_blocks(blocks.astype(np.int64)).astype(np.int16)
    qt_plane = np.tile(img.luma_qtable, (h8 // 8, w8 // 8)).astype(np.uint8)
    return CoefficientPlanes(dct_plane, qt_plane)


def planes_from_pixels(luma: np.ndarray, qtable: np.ndarray) -> CoefficientPlanes:
    """Fallback path: recompute the coefficient plane from decoded pixels
    with the header table. IDCT rounding makes this agree with the parsed
    plane only to +-1 per entry."""
    h8, w8 = grid_crop_box(*luma.shape)
    dct_plane = block_dct_quantize(luma[:h8, :w8], qtable).astype(np.int16)
    qt_plane = np.tile(np.asarray(qtable, dtype=np.uint8), (h8 // 8, w8 // 8))
    return CoefficientPlanes(dct_plane, qt_plane)


def write_dctp(path, planes: CoefficientPlanes) -> None:
    h, w = planes.shape
    with open(path, "wb") as f:
        f.write(DCTP_MAGIC)
        f.write(struct.pack("<II", h, w))
        f.write(planes.dct_plane.astype("<i2").tobytes())
        f.write(planes.qt_plane.astype(np.uint8).tobytes())


def read_dctp(path) -> CoefficientPlanes:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != DCTP_MAGIC:
        raise MalformedStream("not a DCTP container")
    h, w = struct.unpack("<II", raw[4:12])
    need = 12 + h * w * 2 + h * w
    if len(raw) != need:
        raise MalformedStream("DCTP payload size mismatch")
    dct = np.frombuffer(raw, dtype="<i2", count=h * w, offset=12
                        ).reshape(h, w).astype(np.int16)
    qt = np.frombuffer(raw, dtype=np.uint8, count=h * w, offset=12 + h * w * 2
                       ).reshape(h, w).copy()
    return CoefficientPlanes(dct, qt)
