"""The in-memory document sample that flows through the pipeline."""

from dataclasses import dataclass, field, replace

import numpy as np

from ..jpeg import AlignmentLabel, CoefficientPlanes


@dataclass
class DocumentSample:
    """A document image plus every ground truth the pipeline consumes.

    ``bg_mask`` marks pixels that have been background through the sample's
    whole history (1 = background); tampered regions that once held text stay
    text, which is what keeps background statistics trustworthy for
    prototype estimation. ``text_mask`` is the current dilated text layout.
    """

    image: np.ndarray               # (H, W, 3) uint8, decoded pixels
    coeffs: CoefficientPlanes
    forgery_mask: np.ndarray        # (H, W) uint8 {0,1}, 1 = tampered
    bg_mask: np.ndarray             # (H, W) uint8 {0,1}, 1 = background
    align_label: AlignmentLabel
    history: list = field(default_factory=list)
    jpeg: bytes = b""
    text_mask: np.ndarray | None = None
    ever_text: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.image.shape[:2]

    @property
    def tampered(self) -> bool:
        return bool(self.forgery_mask.any())

    def clone(self) -> "DocumentSample":
        return replace(
            self,
            image=self.image.copy(),
            forgery_mask=self.forgery_mask.copy(),
            bg_mask=self.bg_mask.copy(),
            history=list(self.history),
            text_mask=None if self.text_mask is None else self.text_mask.copy(),
            ever_text=None if self.ever_text is None else self.ever_text.copy(),
        )
