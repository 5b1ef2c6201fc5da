"""Tamper operations on rendered documents.

All three ops target text regions, alter pixels inside one rectangle, then
re-encode the document at a fresh quality factor so the forgery leaves both
content and compression-history traces. The forgery mask is exactly the
edited rectangle.
"""

import numpy as np

from ..errors import DonorMissing, NoTextRegion, SpecError
from ..jpeg import coefficient_planes, encode_jpeg, parse_jpeg
from .sample import DocumentSample

TAMPER_OPS = ("copy_move", "splice", "erase")

# rectangle sizes track a single text-line band; with the default layout the
# tampered-pixel ratio of a 256x256 page lands in roughly [0.8%, 2.8%]
_RECT_W = (48, 108)
_RECT_H = (11, 17)
_MIN_TEXT_COVER = 0.82
_SIZE_TRIES = 16


def _coverage_map(text_mask: np.ndarray, rh: int, rw: int) -> np.ndarray:
    """Text-pixel count of every rh x rw rectangle (top-left indexed)."""
    ii = np.pad(text_mask.astype(np.int64).cumsum(0).cumsum(1),
                ((1, 0), (1, 0)))
    return (ii[rh:, rw:] - ii[:-rh, rw:] - ii[rh:, :-rw] + ii[:-rh, :-rw])


def _find_rect(text_mask: np.ndarray, rng: np.random.Generator,
               rh: int, rw: int,
               exclude: tuple[int, int, int, int] | None = None):
    """Top-left of an rh x rw rectangle with >=_MIN_TEXT_COVER text, or None."""
    hh, ww = text_mask.shape
    if rh >= hh or rw >= ww:
        return None
    cov = _coverage_map(text_mask, rh, rw)
    ok = cov >= _MIN_TEXT_COVER * rh * rw
    if exclude is not None:
        ey, ex, eh, ew = exclude
        ys = np.arange(ok.shape[0])[:, None]
        xs = np.arange(ok.shape[1])[None, :]
        ok &= ~((ys < ey + eh) & (ys + rh > ey)
                & (xs < ex + ew) & (xs + rw > ex))
    cand_y, cand_x = np.nonzero(ok)
    if not len(cand_y):
        return None
    k = int(rng.integers(0, len(cand_y)))
    return int(cand_y[k]), int(cand_x[k])


def _sample_sizes(rng: np.random.Generator):
    """Rect sizes to try, shrinking the width ceiling as tries fail so
    short-lined documents still find a placement."""
    for i in range(_SIZE_TRIES):
        w_hi = max(_RECT_W[0] + 8, _RECT_W[1] - 4 * i)
        yield (int(rng.integers(*_RECT_H, endpoint=True)),
               int(rng.integers(_RECT_W[0], w_hi, endpoint=True)))


def _local_bg_color(sample: DocumentSample, rect) -> np.ndarray:
    y, x, h, w = rect
    pad = 12
    hh, ww = sample.shape
    y0, y1 = max(0, y - pad), min(hh, y + h + pad)
    x0, x1 = max(0, x - pad), min(ww, x + w + pad)
    region = sample.image[y0:y1, x0:x1].reshape(-1, 3)
    bg = sample.bg_mask[y0:y1, x0:x1].reshape(-1).astype(bool)
    if bg.any():
        return np.median(region[bg], axis=0)
    full_bg = sample.bg_mask.reshape(-1).astype(bool)
    if full_bg.any():
        return np.median(sample.image.reshape(-1, 3)[full_bg], axis=0)
    return sample.image.reshape(-1, 3).mean(axis=0)


def apply_tamper(sample: DocumentSample, op: str, seed: int,
                 donor: DocumentSample | None = None,
                 region: tuple[int, int, int, int] | None = None,
                 source: tuple[int, int] | None = None,
                 qf_range: tuple[int, int] = (75, 100)) -> DocumentSample:
    """Tamper one rectangle and re-encode at a fresh quality factor.

    ``region`` (y, x, h, w) and ``source`` (y, x) override the seeded
    placement. The returned sample's forgery mask gains exactly ``region``.
    """
    if op not in TAMPER_OPS:
        raise SpecError(f"unknown tamper op {op!r}")
    if sample.text_mask is None or not sample.text_mask.any():
        raise NoTextRegion("document has no text to tamper with")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 1]))
    if op == "splice":
        if donor is None:
            raise DonorMissing("splice requires a donor document")
        if donor.text_mask is None or not donor.text_mask.any():
            raise NoTextRegion("donor document has no text")
    out = sample.clone()
    text = out.text_mask

    # pick the edited rectangle (and, for paste ops, a matching source)
    y = x = h = w = None
    src = source
    if region is not None:
        y, x, h, w = region
        if src is None and op == "copy_move":
            src = _find_rect(text, rng, h, w, exclude=(y, x, h, w))
        if src is None and op == "splice":
            src = _find_rect(donor.text_mask, rng, h, w)
        if src is None and op != "erase":
            raise NoTextRegion(f"no {h}x{w} source region available")
    else:
        for rh, rw in _sample_sizes(rng):
            dest = _find_rect(text, rng, rh, rw)
            if dest is None:
                continue
            if op == "copy_move" and src is None:
                cand = _find_rect(text, rng, rh, rw,
                                  exclude=(dest[0], dest[1], rh, rw))
                if cand is None:
                    continue
                y, x, h, w = *dest, rh, rw
                src = cand
                break
            if op == "splice" and src is None:
                cand = _find_rect(donor.text_mask, rng, rh, rw)
                if cand is None:
                    continue
                y, x, h, w = *dest, rh, rw
                src = cand
                break
            y, x, h, w = *dest, rh, rw
            break
        if y is None:
            raise NoTextRegion(
                f"no {_MIN_TEXT_COVER:.0%}-text rectangle available")

    if op == "erase":
        # a manual retouch never matches the background exactly: keep a
        # small seeded estimation error on the fill
        color = _local_bg_color(out, (y, x, h, w)) + rng.uniform(-4.0, 4.0, 3)
        out.image[y:y + h, x:x + w] = np.clip(color + 0.5, 0, 255).astype(np.uint8)
        out.text_mask[y:y + h, x:x + w] = 0
        params = {"rect": [y, x, h, w]}
    elif op == "copy_move":
        sy, sx = src
        if (sy, sx) == (y, x):
            raise SpecError("copy_move source equals destination")
        out.image[y:y + h, x:x + w] = sample.image[sy:sy + h, sx:sx + w]
        out.text_mask[y:y + h, x:x + w] = sample.text_mask[sy:sy + h, sx:sx + w]
        params = {"rect": [y, x, h, w], "source": [sy, sx]}
    else:  # splice
        sy, sx = src
        out.image[y:y + h, x:x + w] = donor.image[sy:sy + h, sx:sx + w]
        out.text_mask[y:y + h, x:x + w] = donor.text_mask[sy:sy + h, sx:sx + w]
        params = {"rect": [y, x, h, w], "source": [sy, sx]}

    out.forgery_mask[y:y + h, x:x + w] = 1
    # text_mask is already region-dilated; background = never-text pixels
    out.ever_text = np.maximum(out.ever_text, out.text_mask)
    out.bg_mask = (1 - out.ever_text).astype(np.uint8)

    qf = int(rng.integers(*qf_range, endpoint=True))
    data = encode_jpeg(out.image, qf)
    parsed = parse_jpeg(data)
    out.image = parsed.decoded_pixels
    out.coeffs = coefficient_planes(parsed)
    out.jpeg = data
    out.history = out.history + [(op, params), ("jpeg", {"qf": qf})]
    return out
