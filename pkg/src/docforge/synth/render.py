"""Deterministic pseudo-glyph document rendering.

Documents are rows of dark rectangular glyph marks on a lightly textured
bright background, JPEG-encoded at a sampled quality so every sample carries
a real compression history. Per-document appearance (tint, ink, noise) is
seeded, which gives splice donors a distinct fingerprint.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import SpecError
from ..jpeg import AlignmentLabel, coefficient_planes, encode_jpeg, parse_jpeg
from .background import dilate_text
from .sample import DocumentSample


@dataclass
class LayoutSpec:
    height: int = 256
    width: int = 256
    margin: int = 14
    line_spacing: tuple[int, int] = (25, 36)
    glyph_height: tuple[int, int] = (5, 8)
    glyph_width: tuple[int, int] = (2, 6)
    glyph_gap: tuple[int, int] = (1, 3)
    word_len: tuple[int, int] = (2, 8)
    word_gap: tuple[int, int] = (4, 9)
    blank_line_prob: float = 0.25
    short_line_prob: float = 0.5
    bg_gray: tuple[int, int] = (218, 252)
    glyph_gray: tuple[int, int] = (15, 95)
    tint_amplitude: float = 6.0
    noise_sigma: tuple[float, float] = (0.5, 3.0)
    qf_range: tuple[int, int] = (75, 100)
    max_lines: int | None = None          # None = as many as fit; 0 = no text
    text_fraction_band: tuple[float, float] = (0.05, 0.25)

    def validate(self) -> None:
        if self.height < 128 or self.width < 128:
            raise SpecError("canvas must be at least 128x128")
        if 2 * self.margin >= min(self.height, self.width):
            raise SpecError("margins leave no drawable area")
        if self.glyph_height[1] + 2 > self.line_spacing[0]:
            raise SpecError("glyphs taller than the line spacing")


def _draw_text(canvas: np.ndarray, strokes: np.ndarray, spec: LayoutSpec,
               rng: np.random.Generator) -> None:
    h, w = canvas.shape[:2]
    ink = rng.integers(*spec.glyph_gray, endpoint=True)
    y = spec.margin + int(rng.integers(0, 6))
    lines = 0
    while y + spec.glyph_height[1] < h - spec.margin:
        if spec.max_lines is not None and lines >= spec.max_lines:
            break
        if rng.random() < spec.blank_line_prob:
            y += int(rng.integers(*spec.line_spacing, endpoint=True))
            continue
        x = spec.margin + int(rng.integers(0, 8))
        x_end = w - spec.margin
        if rng.random() < spec.short_line_prob:
            x_end = spec.margin + int((x_end - spec.margin) * rng.uniform(0.3, 0.8))
        while x < x_end:
            for _ in range(int(rng.integers(*spec.word_len, endpoint=True))):
                gw = int(rng.integers(*spec.glyph_width, endpoint=True))
                gh = int(rng.integers(*spec.glyph_height, endpoint=True))
                if x + gw >= x_end:
                    break
                yy = y + int(rng.integers(0, 2))
                shade = np.clip(ink + rng.integers(-12, 13), 0, 255)
                canvas[yy:yy + gh, x:x + gw] = shade
                strokes[yy:yy + gh, x:x + gw] = 1
                x += gw + int(rng.integers(*spec.glyph_gap, endpoint=True))
            x += int(rng.integers(*spec.word_gap, endpoint=True))
        y += int(rng.integers(*spec.line_spacing, endpoint=True))
        lines += 1


def render_document(spec: LayoutSpec, seed: int) -> DocumentSample:
    """Render a pristine document; bit-identical for a fixed (spec, seed)."""
    spec.validate()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF]))
    h, w = spec.height, spec.width

    base = rng.integers(*spec.bg_gray, endpoint=True)
    tint = rng.uniform(-spec.tint_amplitude, spec.tint_amplitude, size=3)
    gradient = np.linspace(-2.0, 2.0, h)[:, None, None] * rng.uniform(-1, 1)
    sigma = rng.uniform(*spec.noise_sigma)
    canvas = (base + tint[None, None, :] + gradient
              + rng.normal(0.0, sigma, size=(h, w, 3)))
    canvas = np.clip(canvas, 0, 255)

    strokes = np.zeros((h, w), dtype=np.uint8)
    gray_layer = np.full((h, w), 255, dtype=np.int64)
    _draw_text(gray_layer, strokes, spec, rng)
    ink_pixels = strokes.astype(bool)
    jitter = rng.normal(0.0, 1.0, size=(h, w, 3))
    canvas[ink_pixels] = (gray_layer[ink_pixels, None] + jitter[ink_pixels])
    canvas = np.clip(canvas, 0, 255).astype(np.uint8)

    qf = int(rng.integers(*spec.qf_range, endpoint=True))
    data = encode_jpeg(canvas, qf)
    parsed = parse_jpeg(data)

    text = dilate_text(strokes)
    return DocumentSample(
        image=parsed.decoded_pixels,
        coeffs=coefficient_planes(parsed),
        forgery_mask=np.zeros((h, w), dtype=np.uint8),
        bg_mask=(1 - text).astype(np.uint8),
        align_label=AlignmentLabel.ALIGNED,
        history=[("render", {"seed": int(seed)}), ("jpeg", {"qf": qf})],
        jpeg=data,
        text_mask=text.copy(),
        ever_text=text.copy(),
    )
