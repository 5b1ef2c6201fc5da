"""Text/background separation.

Render-time masks and the inference-time heuristic share the same dilation
so region shapes agree (the heuristic stands in for an OCR text detector,
which reports region boxes rather than stroke skeletons).
"""

import cv2
import numpy as np

TEXT_DILATE_KERNEL = np.ones((3, 3), np.uint8)
TEXT_DILATE_ITERS = 2
# below this intensity spread the image is considered textless
_FLAT_STD = 4.0


def dilate_text(strokes: np.ndarray) -> np.ndarray:
    """Glyph strokes (1 = ink) -> text region mask."""
    return cv2.dilate(strokes.astype(np.uint8), TEXT_DILATE_KERNEL,
                      iterations=TEXT_DILATE_ITERS)


def bg_mask_heuristic(image: np.ndarray) -> np.ndarray:
    """Estimate the background mask (1 = background) of a document image.

    Assumes dark text on a bright background; flipped-polarity inputs are
    detected by the mean-intensity test and inverted first. Worst case the
    mask is all ones.
    """
    image = np.asarray(image)
    gray = image.mean(axis=2) if image.ndim == 3 else image.astype(np.float64)
    gray = gray.astype(np.uint8)
    if gray.mean() < 128:
        gray = 255 - gray
    if gray.std() < _FLAT_STD:
        return np.ones(gray.shape, dtype=np.uint8)
    _, below = cv2.threshold(gray, 0, 1, cv2.THRESH_BINARY_INV | cv2.THRESH_OTSU)
    text = dilate_text(below)
    return (1 - text).astype(np.uint8)
