"""Evaluation protocols: distortion battery, pixel metrics, false alarms.

Per distortion spec each test image is distorted, re-encoded at quality 100
whenever the distortion left the pixel domain (the detector needs coefficient
input), and localized; precision/recall/F1 are computed per image on the
tampered class and averaged, with pixel-global rates reported alongside.
"""

import hashlib
from pathlib import Path

import numpy as np

from ..distortions import DistortionSpec, distort, distort_bytes, transform_mask
from ..errors import EmptyDataset
from ..jpeg import coefficient_planes, parse_jpeg
from ..model import ForgeryLocalizer, load_checkpoint
from ..model.inference import infer_arrays
from ..synth import CorpusManifest, load_manifest
from .data import CorpusData, LoadedSample
from .report import EvalRow, MetricsReport


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def pixel_counts(pred: np.ndarray, truth: np.ndarray) -> tuple[int, int, int]:
    pred = pred.astype(bool)
    truth = truth.astype(bool)
    tp = int((pred & truth).sum())
    return tp, int(pred.sum()) - tp, int(truth.sum()) - tp


def image_metrics(pred: np.ndarray, truth: np.ndarray):
    tp, fp, fn = pixel_counts(pred, truth)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall, f1_score(precision, recall)


def corpus_hash(manifest: CorpusManifest) -> str:
    path = Path(manifest.root) / "manifest.jsonl"
    if path.exists():
        return hashlib.sha256(path.read_bytes()).hexdigest()
    payload = "\n".join(e.to_json() for e in manifest.entries).encode()
    return hashlib.sha256(payload).hexdigest()


def _resolve_model(model_or_ckpt, gate_mode=None) -> ForgeryLocalizer:
    if isinstance(model_or_ckpt, ForgeryLocalizer):
        return model_or_ckpt
    model, _ = load_checkpoint(model_or_ckpt, gate_mode=gate_mode)
    return model


def distorted_view(sample: LoadedSample, spec: DistortionSpec):
    """(pixels, planes, forgery, bg) after one distortion + re-encode policy."""
    if spec.kind == "clean":
        return sample.image, sample.planes, sample.forgery, sample.bg
    forgery = transform_mask(sample.forgery, spec, sample.image.shape)
    bg = transform_mask(sample.bg, spec, sample.image.shape)
    if spec.reencodes:
        data = distort_bytes(sample.image, spec)
    else:
        moved = distort(sample.image, spec)
        # the distortion left the pixel domain: furnish coefficients at
        # (near-)lossless quality so the detector contract holds
        data = distort_bytes(moved, DistortionSpec("jpeg", 100, spec.seed))
    parsed = parse_jpeg(data)
    return parsed.decoded_pixels, coefficient_planes(parsed), forgery, bg


def evaluate(model_or_ckpt, manifest, battery_specs, split: str = "test",
             gate_mode: str | None = None, max_images: int | None = None,
             dataset_name: str = "toy", data: CorpusData | None = None
             ) -> MetricsReport:
    """Battery evaluation over the tampered samples of a split."""
    if not isinstance(manifest, CorpusManifest):
        manifest = load_manifest(manifest)
    model = _resolve_model(model_or_ckpt, gate_mode)
    model.eval()
    if data is None:
        data = CorpusData(manifest, split=split, stride=model.config.stride)
    # aligned originals only: the battery itself supplies grid disruption
    samples = [s for s in data.samples if s.tampered and s.align == 1]
    if max_images is not None:
        samples = samples[:max_images]
    if not samples:
        raise EmptyDataset(f"no tampered samples in split {split!r}")

    rows = []
    for spec in battery_specs:
        per_image = []
        scores = []
        g_tp = g_fp = g_fn = 0
        for s in samples:
            pixels, planes, forgery, bg = distorted_view(s, spec)
            pred, score = infer_arrays(model, pixels, planes, bg_mask=bg,
                                       gate_mode=gate_mode)
            scores.append(score)
            per_image.append(image_metrics(pred, forgery))
            tp, fp, fn = pixel_counts(pred, forgery)
            g_tp += tp
            g_fp += fp
            g_fn += fn
        p = float(np.mean([m[0] for m in per_image]))
        r = float(np.mean([m[1] for m in per_image]))
        f = float(np.mean([m[2] for m in per_image]))
        gp = g_tp / (g_tp + g_fp) if g_tp + g_fp else 0.0
        gr = g_tp / (g_tp + g_fn) if g_tp + g_fn else 0.0
        rows.append(EvalRow(
            dataset=dataset_name, code=spec.code,
            spec={"kind": spec.kind, "level": spec.level, "seed": spec.seed},
            n_images=len(samples), precision=p, recall=r, f1=f,
            pixel_precision=gp, pixel_recall=gr, pixel_f1=f1_score(gp, gr),
            mean_align_score=float(np.mean(scores))))
    return MetricsReport(corpus_hash=corpus_hash(manifest), rows=rows)


def false_alarm(model_or_ckpt, manifest, tau: float = 0.005,
                split: str = "test", max_images: int | None = None,
                data: CorpusData | None = None) -> dict:
    """Image-level false alarm rate over pristine samples, plus the mean
    pixel-level false-positive rate."""
    if not isinstance(manifest, CorpusManifest):
        manifest = load_manifest(manifest)
    model = _resolve_model(model_or_ckpt)
    if data is None:
        data = CorpusData(manifest, split=split, stride=model.config.stride)
    pristine = [s for s in data.samples if not s.tampered and s.align == 1]
    if max_images is not None:
        pristine = pristine[:max_images]
    if not pristine:
        raise EmptyDataset(f"no pristine samples in split {split!r}")
    flagged = 0
    fp_rates = []
    for s in pristine:
        pred, _ = infer_arrays(model, s.image, s.planes, bg_mask=s.bg)
        ratio = float(pred.mean())
        fp_rates.append(ratio)
        flagged += int(ratio > tau)
    return {"far": flagged / len(pristine),
            "pixel_fp_rate": float(np.mean(fp_rates)),
            "tau": tau, "n_images": len(pristine),
            "corpus_hash": corpus_hash(manifest)}
