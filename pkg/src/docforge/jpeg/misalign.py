"""Block-grid misalignment augmentations with ground-truth labels.

A transform keeps the historical 8x8 compression grid only when it moves
the content by whole blocks: crop/shift amounts divisible by 8 at scale 1.
Anything else earns label 0 (non-aligned).
"""

from enum import IntEnum

import cv2
import numpy as np

from ..errors import DegenerateOutput, RangeError

MIN_OUTPUT = 64
KINDS = ("crop", "shift", "resize")


class AlignmentLabel(IntEnum):
    NON_ALIGNED = 0
    ALIGNED = 1


def apply_geometry(array: np.ndarray, kind: str, amount,
                   interpolation=cv2.INTER_LINEAR) -> np.ndarray:
    """The geometric map of `misalign`, reusable on masks so that images and
    their masks transform identically."""
    if kind == "crop":
        a = int(amount)
        if a < 0:
            raise RangeError("crop amount must be >= 0")
        h, w = array.shape[:2]
        if a == 0:
            return array.copy()
        return array[a:h - a, a:w - a].copy()
    if kind == "shift":
        a = int(amount)
        return np.roll(array, (a, a), axis=(0, 1))
    if kind == "resize":
        s = float(amount)
        if s <= 0:
            raise RangeError("resize scale must be > 0")
        h, w = array.shape[:2]
        if s == 1.0:
            return array.copy()
        out = cv2.resize(array, (max(1, round(w * s)), max(1, round(h * s))),
                         interpolation=interpolation)
        return out
    raise RangeError(f"unknown misalignment kind {kind!r}")


def alignment_label(kind: str, amount) -> AlignmentLabel:
    if kind in ("crop", "shift"):
        aligned = int(amount) % 8 == 0
    elif kind == "resize":
        aligned = float(amount) == 1.0
    else:
        raise RangeError(f"unknown misalignment kind {kind!r}")
    return AlignmentLabel.ALIGNED if aligned else AlignmentLabel.NON_ALIGNED


def misalign(image: np.ndarray, kind: str, amount) -> tuple[np.ndarray, AlignmentLabel]:
    """Apply a grid-perturbing transform; returns the new image and whether
    the historical block grid survived."""
    label = alignment_label(kind, amount)
    out = apply_geometry(image, kind, amount)
    if out.shape[0] < MIN_OUTPUT or out.shape[1] < MIN_OUTPUT:
        raise DegenerateOutput(
            f"{kind}({amount}) leaves {out.shape[0]}x{out.shape[1]} < "
            f"{MIN_OUTPUT}x{MIN_OUTPUT}")
    return out, label
