"""Corpus loading and batch assembly for training and evaluation.

Samples are parsed once into memory (coefficient planes included) and
conformed to the network stride with a grid-anchored crop. Training batches
take random crops whose offsets are multiples of 8, so every crop keeps the
compression-grid anchor and the sample's alignment label stays truthful.
"""

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import EmptyDataset
from ..jpeg import (CoefficientPlanes, coefficient_planes, encode_jpeg,
                    parse_jpeg)
from ..model.inference import conform
from ..synth import CorpusManifest, ManifestEntry, load_manifest, load_mask


@dataclass
class LoadedSample:
    image: np.ndarray          # (H, W, 3) uint8, stride-conformed
    planes: CoefficientPlanes
    forgery: np.ndarray        # (H, W) uint8 {0,1}
    bg: np.ndarray             # (H, W) uint8 {0,1}
    align: int
    tampered: int
    entry: ManifestEntry


class CorpusData:
    """All samples of one split, parsed and cached."""

    def __init__(self, manifest: CorpusManifest | str, split: str = "train",
                 stride: int = 16, max_samples: int | None = None):
        if not isinstance(manifest, CorpusManifest):
            manifest = load_manifest(manifest)
        self.manifest = manifest
        self.split = split
        entries = manifest.select(split=split)
        if max_samples is not None:
            entries = entries[:max_samples]
        if not entries:
            raise EmptyDataset(f"split {split!r} has no entries")
        self.samples = [self._load(manifest.root, e, stride) for e in entries]

    @staticmethod
    def _load(root, entry: ManifestEntry, stride: int) -> LoadedSample:
        parsed = parse_jpeg((root / entry.path).read_bytes())
        planes = coefficient_planes(parsed)
        forgery = load_mask(root / entry.mask)
        bg = load_mask(root / entry.bg)
        image, planes, (forgery, bg) = conform(
            parsed.decoded_pixels, planes, [forgery, bg], stride)
        return LoadedSample(image=image, planes=planes, forgery=forgery,
                            bg=bg, align=entry.align, tampered=entry.tampered,
                            entry=entry)

    def __len__(self) -> int:
        return len(self.samples)

    def select(self, align: int | None = None, tampered: bool | None = None):
        out = self.samples
        if align is not None:
            out = [s for s in out if s.align == align]
        if tampered is not None:
            out = [s for s in out if bool(s.tampered) == tampered]
        return out


def _augment_crop(image, dct, qt, forgery, bg, align, rng,
                  misalign_prob, recompress_prob, qf_range):
    """Optional on-the-fly grid augmentation of one training crop."""
    roll = rng.random()
    if roll < misalign_prob:
        s = int(rng.integers(1, 8))
        image = np.roll(image, (s, s), axis=(0, 1))
        forgery = np.roll(forgery, (s, s), axis=(0, 1))
        bg = np.roll(bg, (s, s), axis=(0, 1))
        align = 0
    elif roll > 1.0 - recompress_prob:
        pass  # fall through to the re-encode below with alignment preserved
    else:
        return image, dct, qt, forgery, bg, align
    qf = int(rng.integers(qf_range[0], qf_range[1] + 1))
    parsed = parse_jpeg(encode_jpeg(image, qf))
    planes = coefficient_planes(parsed)
    return (parsed.decoded_pixels, planes.dct_plane, planes.qt_plane,
            forgery, bg, align)


class BatchSampler:
    """Random-crop training batches mixing aligned and misaligned samples."""

    def __init__(self, data: CorpusData, batch_size: int, crop: int,
                 seed: int = 0, misalign_prob: float = 0.0,
                 recompress_prob: float = 0.0,
                 qf_range: tuple[int, int] = (75, 100),
                 positive_bias: float = 0.7):
        self.data = data
        self.batch_size = batch_size
        self.crop = crop
        self.rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 5]))
        self.misalign_prob = misalign_prob
        self.recompress_prob = recompress_prob
        self.qf_range = qf_range
        self.positive_bias = positive_bias

    def _offsets(self, s: LoadedSample, c: int) -> tuple[int, int]:
        """8-aligned crop offsets, biased toward covering the tampered
        region (small forgeries would otherwise rarely enter a crop)."""
        h, w = s.image.shape[:2]
        if (s.tampered and s.forgery.any()
                and self.rng.random() < self.positive_bias):
            ys, xs = np.nonzero(s.forgery)
            cy = int((ys.min() + ys.max()) // 2)
            cx = int((xs.min() + xs.max()) // 2)
            jitter_y = int(self.rng.integers(-3, 4)) * 8
            jitter_x = int(self.rng.integers(-3, 4)) * 8
            oy = min(max(cy - c // 2 + jitter_y, 0), max(h - c, 0)) // 8 * 8
            ox = min(max(cx - c // 2 + jitter_x, 0), max(w - c, 0)) // 8 * 8
            return oy, ox
        oy = int(self.rng.integers(0, (h - c) // 8 + 1)) * 8 if h > c else 0
        ox = int(self.rng.integers(0, (w - c) // 8 + 1)) * 8 if w > c else 0
        return oy, ox

    def next_batch(self):
        imgs, dcts, qts, ys, bgs, aligns = [], [], [], [], [], []
        n = len(self.data)
        for _ in range(self.batch_size):
            s = self.data.samples[int(self.rng.integers(0, n))]
            c = self.crop
            oy, ox = self._offsets(s, c)
            img = s.image[oy:oy + c, ox:ox + c]
            dct = s.planes.dct_plane[oy:oy + c, ox:ox + c]
            qt = s.planes.qt_plane[oy:oy + c, ox:ox + c]
            y = s.forgery[oy:oy + c, ox:ox + c]
            bg = s.bg[oy:oy + c, ox:ox + c]
            align = s.align
            if self.misalign_prob > 0 or self.recompress_prob > 0:
                img, dct, qt, y, bg, align = _augment_crop(
                    img, dct, qt, y, bg, align, self.rng,
                    self.misalign_prob, self.recompress_prob, self.qf_range)
            imgs.append(img)
            dcts.append(dct)
            qts.append(qt)
            ys.append(y)
            bgs.append(bg)
            aligns.append(align)
        return collate(imgs, dcts, qts, ys, bgs, aligns)


def collate(imgs, dcts, qts, ys, bgs, aligns):
    image = torch.from_numpy(np.stack(imgs)).float().permute(0, 3, 1, 2) / 255.0
    dct = torch.from_numpy(np.stack(dcts).astype(np.int64))
    qt = torch.from_numpy(np.stack(qts).astype(np.int64))
    y = torch.from_numpy(np.stack(ys).astype(np.int64))
    bg = torch.from_numpy(np.stack(bgs).astype(np.float32)).unsqueeze(1)
    align = torch.tensor([int(a) for a in aligns], dtype=torch.long)
    return image, dct, qt, y, bg, align


def full_batch(samples: list[LoadedSample]):
    """Collate whole samples (must share one spatial size)."""
    return collate([s.image for s in samples],
                   [s.planes.dct_plane for s in samples],
                   [s.planes.qt_plane for s in samples],
                   [s.forgery for s in samples],
                   [s.bg for s in samples],
                   [s.align for s in samples])
