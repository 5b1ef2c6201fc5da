"""Seeded training loop with per-step loss logging and versioned checkpoints."""

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from tqdm import tqdm

from ..errors import NonFiniteLoss
from ..losses import (LossWeights, loss_alignment, loss_contrastive,
                      loss_forgery, loss_reconstruction, recon_target,
                      total_loss)
from ..model import ForgeryLocalizer, ModelConfig, save_checkpoint
from .data import BatchSampler, CorpusData

LOG_FIELDS = ("step", "alignment", "reconstruction", "forgery", "contrastive",
              "total", "align_score_mean")


@dataclass
class TrainConfig:
    manifest: str = ""
    out_dir: str = "runs/default"
    model: ModelConfig = field(default_factory=ModelConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    steps: int = 600
    batch_size: int = 8
    crop: int = 128
    lr: float = 2e-3
    weight_decay: float = 0.0
    seed: int = 0
    ckpt_every: int = 250
    misalign_prob: float = 0.15
    recompress_prob: float = 0.25
    qf_range: tuple[int, int] = (75, 100)
    positive_bias: float = 0.7
    split: str = "train"
    max_samples: int | None = None
    progress: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, default=list)

    @staticmethod
    def from_json(path) -> "TrainConfig":
        raw = json.loads(Path(path).read_text())
        raw["model"] = ModelConfig(**{k: tuple(v) if isinstance(v, list) else v
                                      for k, v in raw.get("model", {}).items()})
        raw["weights"] = LossWeights(**raw.get("weights", {}))
        if "qf_range" in raw:
            raw["qf_range"] = tuple(raw["qf_range"])
        return TrainConfig(**raw)


def compute_losses(model: ForgeryLocalizer, batch, weights: LossWeights,
                   step: int = 0, seed: int = 0):
    """Forward pass + all four loss terms for one batch."""
    image, dct, qt, y, bg, align = batch
    out = model(image, dct, qt, bg, shuffle_seed=seed * 7919 + step)
    terms = {}
    if out.align_logits is not None:
        terms["alignment"] = loss_alignment(out.align_logits, align)
    if out.recon is not None:
        channels = 3 if model.config.recon_targets == "rgb" else 4
        target = recon_target(image, dct, model.config.dct_clip)
        terms["reconstruction"] = loss_reconstruction(
            out.recon, out.recon_shuffled, target, channels)
    terms["forgery"] = loss_forgery(out.logits, y, ce_weight=weights.ce,
                                    class_weights=weights.ce_class_weights)
    if weights.contrastive > 0:
        gen = torch.Generator().manual_seed((seed * 99991 + step) & 0x7FFFFFFF)
        terms["contrastive"] = loss_contrastive(
            out.forgery_pyramid, y, weights.contrast_samples, gen)
    total, report = total_loss(weights, **terms)
    return total, report, out


def train(config: TrainConfig) -> Path:
    """Run the optimization; returns the final checkpoint path.

    A non-finite loss aborts the run, keeping the last good checkpoint.
    """
    torch.manual_seed(config.seed)
    np.random.seed(config.seed & 0xFFFFFFFF)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "train_config.json").write_text(config.to_json())

    data = CorpusData(config.manifest, split=config.split,
                      stride=config.model.stride,
                      max_samples=config.max_samples)
    sampler = BatchSampler(data, config.batch_size, config.crop,
                           seed=config.seed,
                           misalign_prob=config.misalign_prob,
                           recompress_prob=config.recompress_prob,
                           qf_range=config.qf_range,
                           positive_bias=config.positive_bias)
    model = ForgeryLocalizer(config.model)
    model.train()
    opt = torch.optim.Adam(model.parameters(), lr=config.lr,
                           weight_decay=config.weight_decay)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=config.steps)

    seeds = {"train": config.seed, "shuffle": config.model.shuffle_seed}
    final = out_dir / "ckpt_final.pt"
    last_good = None
    log_path = out_dir / "train_log.csv"
    with open(log_path, "w", newline="") as logf:
        writer = csv.DictWriter(logf, fieldnames=LOG_FIELDS)
        writer.writeheader()
        progress = tqdm(range(1, config.steps + 1), desc="train", leave=False,
                        disable=not config.progress)
        for step in progress:
            batch = sampler.next_batch()
            try:
                total, report, out = compute_losses(
                    model, batch, config.weights, step=step, seed=config.seed)
            except NonFiniteLoss:
                if last_good is not None:
                    return last_good
                raise
            opt.zero_grad()
            total.backward()
            opt.step()
            sched.step()
            writer.writerow({**report.as_row(), "step": step,
                             "align_score_mean": float(out.align_score.detach().mean())})
            if step % 25 == 0:
                progress.set_postfix(total=f"{report.total:.3f}")
            if config.ckpt_every and step % config.ckpt_every == 0:
                last_good = save_checkpoint(out_dir / f"ckpt_step{step}.pt",
                                            model, step=step, seeds=seeds)
    model.eval()
    save_checkpoint(final, model, step=config.steps, seeds=seeds)
    return final


@torch.no_grad()
def alignment_accuracy(model: ForgeryLocalizer, data: CorpusData,
                       max_samples: int | None = None) -> float:
    """Held-out accuracy of the alignment head (adaptive gate only)."""
    from ..model.inference import infer_arrays

    model.eval()
    samples = data.samples[:max_samples] if max_samples else data.samples
    correct = 0
    for s in samples:
        _, score = infer_arrays(model, s.image, s.planes, bg_mask=s.bg)
        correct += int(round(score) == s.align)
    return correct / len(samples)
