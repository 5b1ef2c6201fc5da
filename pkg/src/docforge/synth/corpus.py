"""Deterministic corpus generation and the line-delimited manifest.

Every entry derives its RNG stream from (global_seed, index), so two builds
with the same seed produce byte-identical files. Each base sample is emitted
in aligned form and, for a configurable fraction, as a misaligned twin
(geometric op + re-encode, label 0) for alignment-classifier supervision.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import NoTextRegion, SpecError
from ..jpeg import (AlignmentLabel, apply_geometry, coefficient_planes,
                    encode_jpeg, misalign, parse_jpeg)
from .render import LayoutSpec, render_document
from .sample import DocumentSample
from .tamper import TAMPER_OPS, apply_tamper

MANIFEST_NAME = "manifest.jsonl"
META_NAME = "meta.json"


@dataclass
class CorpusConfig:
    n_train: int = 64
    n_val: int = 0
    n_test: int = 16
    tampered_fraction: float = 0.75
    misaligned_ratio: float = 1.0      # misaligned twins per aligned sample
    tamper_mix: tuple[str, ...] = TAMPER_OPS
    qf_range: tuple[int, int] = (75, 100)
    layout: LayoutSpec = field(default_factory=LayoutSpec)
    global_seed: int = 0

    @staticmethod
    def from_json(path) -> "CorpusConfig":
        raw = json.loads(Path(path).read_text())
        layout = LayoutSpec(**{k: tuple(v) if isinstance(v, list) else v
                               for k, v in raw.pop("layout", {}).items()})
        cleaned = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
        return CorpusConfig(layout=layout, **cleaned)


@dataclass
class ManifestEntry:
    path: str
    mask: str
    bg: str
    split: str
    tampered: int
    align: int
    seed: int
    height: int
    width: int
    history: list

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class CorpusManifest:
    root: Path
    global_seed: int
    entries: list[ManifestEntry]

    def select(self, split: str | None = None, tampered: bool | None = None,
               align: int | None = None) -> list[ManifestEntry]:
        out = self.entries
        if split is not None:
            out = [e for e in out if e.split == split]
        if tampered is not None:
            out = [e for e in out if bool(e.tampered) == tampered]
        if align is not None:
            out = [e for e in out if e.align == align]
        return out


def _save_mask(path: Path, mask: np.ndarray) -> None:
    Image.fromarray((mask.astype(np.uint8) * 255)).save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    return (np.asarray(Image.open(path).convert("L")) > 127).astype(np.uint8)


def _misaligned_twin(sample: DocumentSample, rng: np.random.Generator,
                     qf_range) -> DocumentSample:
    """Geometric grid disruption + fresh encode; label records the broken
    historical grid, not the final file's own consistency."""
    kind = ("crop", "shift", "resize")[int(rng.integers(0, 3))]
    if kind == "crop":
        amount = int(rng.choice([1, 2, 3, 5, 6, 7]))
    elif kind == "shift":
        amount = int(rng.integers(1, 8))
    else:
        amount = float(rng.choice([0.93, 0.95, 0.97, 1.03, 1.05]))
    moved, label = misalign(sample.image, kind, amount)
    assert label == AlignmentLabel.NON_ALIGNED
    qf = int(rng.integers(*qf_range, endpoint=True))
    data = encode_jpeg(moved, qf)
    parsed = parse_jpeg(data)

    def mask_map(m):
        out = apply_geometry(m.astype(np.uint8) * 255, kind, amount)
        return (out > 127).astype(np.uint8)

    twin = DocumentSample(
        image=parsed.decoded_pixels,
        coeffs=coefficient_planes(parsed),
        forgery_mask=mask_map(sample.forgery_mask),
        bg_mask=mask_map(sample.bg_mask),
        align_label=AlignmentLabel.NON_ALIGNED,
        history=sample.history + [("misalign", {"kind": kind, "amount": amount}),
                                  ("jpeg", {"qf": qf})],
        jpeg=data,
    )
    return twin


def build_sample(config: CorpusConfig, index: int) -> tuple[DocumentSample, int, bool]:
    """Deterministic aligned sample for a corpus index: (sample, seed, tampered).

    Sparse layouts can lack a text rectangle dense enough to tamper; those
    renders are discarded and re-rendered with a derived seed (still a pure
    function of (global_seed, index))."""
    rng = np.random.default_rng(np.random.SeedSequence([config.global_seed & 0xFFFFFFFF,
                                                        index, 7]))
    tampered = rng.random() < config.tampered_fraction
    op = config.tamper_mix[int(rng.integers(0, len(config.tamper_mix)))]
    last_err = None
    for attempt in range(6):
        ss = np.random.SeedSequence([config.global_seed & 0xFFFFFFFF, index, attempt])
        seeds = ss.generate_state(4)
        sample = render_document(config.layout, int(seeds[0]))
        if not tampered:
            return sample, int(seeds[0]), False
        donor = None
        if op == "splice":
            donor = render_document(config.layout, int(seeds[1]))
        try:
            sample = apply_tamper(sample, op, int(seeds[2]), donor=donor,
                                  qf_range=config.qf_range)
            return sample, int(seeds[0]), True
        except NoTextRegion as err:
            last_err = err
    raise last_err


def save_sample(sample: DocumentSample, root: Path, split: str, stem: str,
                seed: int) -> ManifestEntry:
    split_dir = root / split
    split_dir.mkdir(parents=True, exist_ok=True)
    (split_dir / f"{stem}.jpg").write_bytes(sample.jpeg)
    _save_mask(split_dir / f"{stem}.mask.png", sample.forgery_mask)
    _save_mask(split_dir / f"{stem}.bg.png", sample.bg_mask)
    h, w = sample.shape
    return ManifestEntry(
        path=f"{split}/{stem}.jpg", mask=f"{split}/{stem}.mask.png",
        bg=f"{split}/{stem}.bg.png", split=split,
        tampered=int(sample.tampered), align=int(sample.align_label),
        seed=seed, height=h, width=w, history=sample.history)


def build_dataset(config: CorpusConfig, out_dir) -> CorpusManifest:
    """Generate the corpus and write manifest + meta under ``out_dir``."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    if not root.is_dir():
        raise SpecError(f"output directory {root} unusable")

    splits = [("train", config.n_train), ("val", config.n_val),
              ("test", config.n_test)]
    entries: list[ManifestEntry] = []
    index = 0
    for split, count in splits:
        n_twins = round(count * config.misaligned_ratio)
        for j in range(count):
            sample, seed, _ = build_sample(config, index)
            stem = f"{index:05d}" + ("_t" if sample.tampered else "_p")
            entries.append(save_sample(sample, root, split, stem, seed))
            if j < n_twins:
                rng = np.random.default_rng(
                    np.random.SeedSequence([config.global_seed & 0xFFFFFFFF,
                                            index, 11]))
                twin = _misaligned_twin(sample, rng, config.qf_range)
                entries.append(save_sample(twin, root, split, stem + "_m", seed))
            index += 1

    manifest_path = root / MANIFEST_NAME
    with open(manifest_path, "w") as f:
        for e in entries:
            f.write(e.to_json() + "\n")
    meta = {"global_seed": config.global_seed,
            "config": json.loads(json.dumps(asdict(config), default=list)),
            "n_entries": len(entries)}
    (root / META_NAME).write_text(json.dumps(meta, sort_keys=True, indent=1))
    return CorpusManifest(root=root, global_seed=config.global_seed,
                          entries=entries)


def load_manifest(path) -> CorpusManifest:
    """Read a manifest.jsonl (or its directory)."""
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST_NAME
    entries = []
    for line in p.read_text().splitlines():
        if not line.strip():
            continue
        entries.append(ManifestEntry(**json.loads(line)))
    meta_path = p.parent / META_NAME
    seed = 0
    if meta_path.exists():
        seed = json.loads(meta_path.read_text()).get("global_seed", 0)
    return CorpusManifest(root=p.parent, global_seed=seed, entries=entries)
