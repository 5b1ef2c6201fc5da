"""JPEG encoding and recompression chains (libjpeg via Pillow).

Pillow uses the standard quality-factor scaling of the reference tables, so
files produced here double as an independent check on the parser's DQT path.
"""

import io
from typing import NamedTuple, Sequence

import numpy as np
from PIL import Image

from ..errors import RangeError

_SUBSAMPLING = {"4:4:4": 0, "4:2:2": 1, "4:2:0": 2}


class Recompressed(NamedTuple):
    data: bytes
    chain: tuple[int, ...]


def encode_jpeg(image: np.ndarray, qf: int, subsampling: str = "4:4:4") -> bytes:
    """Encode an (H, W, 3) or (H, W) uint8 array as a baseline JPEG.

    4:4:4 by default so the luma block grid is the only grid in play.
    """
    if not 1 <= int(qf) <= 100:
        raise RangeError(f"quality factor {qf} outside [1, 100]")
    if subsampling not in _SUBSAMPLING:
        raise RangeError(f"unknown subsampling {subsampling!r}")
    arr = np.ascontiguousarray(np.asarray(image, dtype=np.uint8))
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(
        buf, format="JPEG", quality=int(qf),
        subsampling=_SUBSAMPLING[subsampling], optimize=False)
    return buf.getvalue()


def decode_pixels(data: bytes) -> np.ndarray:
    """Reference (libjpeg) decode to an (H, W, 3) uint8 array."""
    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("RGB"))


def recompress(image: np.ndarray, qf_chain: Sequence[int],
               subsampling: str = "4:4:4") -> Recompressed:
    """Encode/decode through each quality factor in order; the returned
    bytes are the final encoding and carry the chain as metadata."""
    chain = tuple(int(q) for q in qf_chain)
    if len(chain) < 1:
        raise RangeError("recompression chain must have at least one entry")
    current = np.asarray(image, dtype=np.uint8)
    data = b""
    for qf in chain:
        data = encode_jpeg(current, qf, subsampling)
        current = decode_pixels(data)
    return Recompressed(data, chain)
