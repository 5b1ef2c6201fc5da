"""Synthetic tampered-document corpus generation."""

from .background import bg_mask_heuristic, dilate_text
from .corpus import (CorpusConfig, CorpusManifest, ManifestEntry,
                     build_dataset, build_sample, load_manifest, load_mask,
                     save_sample)
from .render import LayoutSpec, render_document
from .sample import DocumentSample
from .tamper import TAMPER_OPS, apply_tamper

__all__ = [
    "CorpusConfig", "CorpusManifest", "DocumentSample", "LayoutSpec",
    "ManifestEntry", "TAMPER_OPS", "apply_tamper", "bg_mask_heuristic",
    "build_dataset", "build_sample", "dilate_text", "load_manifest",
    "load_mask", "render_document", "save_sample",
]
