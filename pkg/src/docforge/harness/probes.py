"""Analysis probes: gate ablation, gradient magnitudes, text/background bias,
alignment-score distributions, and the module ablation suite.
"""

from collections import Counter
from dataclasses import replace
from pathlib import Path

import numpy as np
import torch

from ..errors import EmptyDataset, MissingRegion
from ..losses import LossWeights
from ..model import ForgeryLocalizer, load_checkpoint
from ..model.blocks import downsample_mask
from ..synth import load_manifest
from .data import CorpusData, full_batch
from .evaluate import distorted_view, evaluate
from .train import TrainConfig, compute_losses, train

GATE_MODES_TABLE = ("adaptive", "fixed_0", "fixed_1")


def gate_ablation(ckpt, manifest, battery_specs, split: str = "test",
                  max_images: int | None = None,
                  data: CorpusData | None = None) -> dict:
    """F1 per gate mode per distortion plus the fixed-1 minus fixed-0 gap."""
    table = {}
    for mode in GATE_MODES_TABLE:
        report = evaluate(ckpt, manifest, battery_specs, split=split,
                          gate_mode=mode, max_images=max_images, data=data)
        table[mode] = {row.code: row.f1 for row in report.rows}
    table["delta_1vs0"] = {code: table["fixed_1"][code] - table["fixed_0"][code]
                           for code in table["fixed_1"]}
    return table


def agm_probe(ckpt, manifest, split: str = "train", batch_size: int = 8,
              gate_modes=("adaptive", "fixed_1"),
              weights: LossWeights | None = None,
              data: CorpusData | None = None) -> dict:
    """Mean absolute parameter gradient of the two encoders under the total
    loss, per batch kind (aligned / non-aligned) and gate mode."""
    model = ckpt if isinstance(ckpt, ForgeryLocalizer) else load_checkpoint(ckpt)[0]
    weights = weights or LossWeights()
    if data is None:
        data = CorpusData(load_manifest(manifest), split=split,
                          stride=model.config.stride)

    def batch_for(align: int):
        base = data.select(align=align)
        if not base:
            raise EmptyDataset(f"no samples with align={align}")
        # batch items must share one spatial size; take the commonest shape
        shape = Counter(s.image.shape[:2] for s in base).most_common(1)[0][0]
        same = [s for s in base if s.image.shape[:2] == shape][:batch_size]
        return full_batch(same)

    batches = {"aligned": batch_for(1), "non_aligned": batch_for(0)}
    result = {}
    for mode in gate_modes:
        cfg = replace(model.config, gate_mode=mode)
        probe_model = ForgeryLocalizer(cfg)
        probe_model.load_state_dict(model.state_dict())
        probe_model.train()
        result[mode] = {}
        for kind, batch in batches.items():
            probe_model.zero_grad()
            total, _, _ = compute_losses(probe_model, batch, weights, step=0)
            total.backward()
            result[mode][kind] = {
                "rgb": _mean_abs_grad(probe_model.rgb_encoder),
                "dct": _mean_abs_grad(probe_model.dct_encoder),
            }
    return result


def _mean_abs_grad(module) -> float:
    if module is None:
        return 0.0
    total_abs = 0.0
    total_n = 0
    for p in module.parameters():
        if p.grad is not None:
            total_abs += float(p.grad.abs().sum())
        total_n += p.numel()
    return total_abs / total_n if total_n else 0.0


@torch.no_grad()
def bias_statistic(ckpt, manifest, split: str = "test",
                   max_images: int | None = None,
                   data: CorpusData | None = None) -> dict:
    """Mean over images of cos(bg, pristine-text) - cos(tampered-text,
    pristine-text) on penultimate localization features. Higher = less
    text/background bias."""
    model = ckpt if isinstance(ckpt, ForgeryLocalizer) else load_checkpoint(ckpt)[0]
    model.eval()
    if data is None:
        data = CorpusData(load_manifest(manifest), split=split,
                          stride=model.config.stride)
    samples = [s for s in data.samples if s.tampered and s.align == 1]
    if max_images is not None:
        samples = samples[:max_images]
    deltas = []
    skipped = 0
    for s in samples:
        batch = full_batch([s])
        image, dct, qt, y, bg, _ = batch
        out = model(image, dct, qt, bg, run_recon=False)
        pen = out.forgery_pyramid[-1][0]               # (C, h, w)
        stride = image.shape[2] // pen.shape[1]
        y_s = downsample_mask(y.unsqueeze(1).float(), stride)[0, 0]
        bg_s = downsample_mask(bg, stride)[0, 0]
        text_s = 1.0 - bg_s
        regions = {
            "bg": (bg_s == 1) & (y_s == 0),
            "pt": (text_s == 1) & (y_s == 0),
            "tt": (text_s == 1) & (y_s == 1),
        }
        if any(not r.any() for r in regions.values()):
            skipped += 1
            continue
        means = {k: pen[:, m].mean(dim=1) for k, m in regions.items()}
        cos = torch.nn.functional.cosine_similarity
        delta = (cos(means["bg"], means["pt"], dim=0)
                 - cos(means["tt"], means["pt"], dim=0))
        deltas.append(float(delta))
    if not deltas:
        raise MissingRegion("no sample had all three regions")
    return {"delta_sc": float(np.mean(deltas)), "n_used": len(deltas),
            "n_skipped": skipped}


@torch.no_grad()
def score_histogram(ckpt, manifest, battery_specs, split: str = "test",
                    bins: int = 20, max_images: int | None = None,
                    data: CorpusData | None = None) -> dict:
    """20-bin histograms of the alignment score per distortion."""
    from ..model.inference import infer_arrays

    model = ckpt if isinstance(ckpt, ForgeryLocalizer) else load_checkpoint(ckpt)[0]
    model.eval()
    if data is None:
        data = CorpusData(load_manifest(manifest), split=split,
                          stride=model.config.stride)
    samples = [s for s in data.samples if s.align == 1]
    if max_images is not None:
        samples = samples[:max_images]
    if not samples:
        raise EmptyDataset("no aligned samples to score")
    out = {}
    for spec in battery_specs:
        scores = []
        for s in samples:
            pixels, planes, _, bg = distorted_view(s, spec)
            _, score = infer_arrays(model, pixels, planes, bg_mask=bg)
            scores.append(score)
        counts, edges = np.histogram(scores, bins=bins, range=(0.0, 1.0))
        out[spec.code] = {"counts": counts.tolist(), "edges": edges.tolist(),
                          "mean": float(np.mean(scores)), "n": len(scores)}
    return out


ABLATION_VARIANTS = {
    # mirrors of the module-toggle rows: baseline, +dct, +contrastive,
    # +adaptive gate, content decoupling targets, prototype estimation
    "baseline":      dict(use_dct=False, hcd=False, ppe=False, con=False, gate="adaptive"),
    "dct":           dict(use_dct=True, hcd=False, ppe=False, con=False, gate="fixed_1"),
    "dct_con":       dict(use_dct=True, hcd=False, ppe=False, con=True, gate="fixed_1"),
    "adaptive":      dict(use_dct=True, hcd=False, ppe=False, con=True, gate="adaptive"),
    "hcd_rgb":       dict(use_dct=True, hcd=True, ppe=False, con=True, gate="adaptive",
                          recon="rgb"),
    "hcd_rgbdct":    dict(use_dct=True, hcd=True, ppe=False, con=True, gate="adaptive"),
    "ppe_no_hcd":    dict(use_dct=True, hcd=False, ppe=True, con=True, gate="adaptive"),
    "full":          dict(use_dct=True, hcd=True, ppe=True, con=True, gate="adaptive"),
}


def variant_config(base: TrainConfig, name: str, out_root: Path) -> TrainConfig:
    toggles = ABLATION_VARIANTS[name]
    model = replace(base.model,
                    use_dct=toggles["use_dct"],
                    hcd_enabled=toggles["hcd"],
                    ppe_enabled=toggles["ppe"],
                    gate_mode=toggles["gate"],
                    recon_targets=toggles.get("recon", "rgb+dct"))
    weights = replace(base.weights,
                      contrastive=base.weights.contrastive if toggles["con"] else 0.0,
                      alignment=base.weights.alignment if toggles["use_dct"] else 0.0)
    return replace(base, model=model, weights=weights,
                   out_dir=str(out_root / name))


def ablation_suite(base: TrainConfig, manifest, battery_specs,
                   variants=("baseline", "ppe_no_hcd", "full"),
                   split: str = "test", max_images: int | None = None) -> list:
    """Train each variant with shared seeds and evaluate on one battery."""
    out_root = Path(base.out_dir)
    rows = []
    for name in variants:
        cfg = variant_config(base, name, out_root)
        ckpt = train(cfg)
        report = evaluate(ckpt, manifest, battery_specs, split=split,
                          max_images=max_images)
        f1s = {r.code: r.f1 for r in report.rows}
        rows.append({"variant": name, "ckpt": str(ckpt), "f1": f1s,
                     "avg_f1": float(np.mean(list(f1s.values()))),
                     "corpus_hash": report.corpus_hash})
    return rows
