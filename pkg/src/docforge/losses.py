"""Training objectives: alignment CE, dual reconstruction L1, localization
(pixel CE + Lovasz-extension Jaccard surrogate), and the within-image
class-balanced pixel contrastive loss.
"""

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .errors import NonFiniteLoss
from .model.blocks import downsample_mask


@dataclass
class LossWeights:
    alignment: float = 0.5
    reconstruction: float = 1.0
    forgery: float = 1.0
    contrastive: float = 0.1
    ce: float = 1.0               # CE share inside the forgery loss
    contrast_samples: int = 64    # per-class pixel cap for the contrastive term
    # optional (pristine, tampered) pixel-CE class weights; tampered pixels
    # are ~1-3% of a document, and plain CE collapses at toy training scale
    ce_class_weights: tuple[float, float] | None = None

    def __post_init__(self):
        if min(self.alignment, self.reconstruction, self.forgery,
               self.contrastive, self.ce) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.contrast_samples < 2:
            raise ValueError("contrast_samples must be >= 2")
        if self.ce_class_weights is not None:
            self.ce_class_weights = tuple(float(w) for w in self.ce_class_weights)


@dataclass
class LossReport:
    alignment: float
    reconstruction: float
    forgery: float
    contrastive: float
    total: float

    def as_row(self) -> dict:
        return {"alignment": self.alignment, "reconstruction": self.reconstruction,
                "forgery": self.forgery, "contrastive": self.contrastive,
                "total": self.total}


# -- alignment ---------------------------------------------------------


def loss_alignment(align_logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """2-class cross-entropy on the alignment head logits."""
    return F.cross_entropy(align_logits, labels.long())


# -- reconstruction ----------------------------------------------------


def recon_target(image01: torch.Tensor, dct_plane: torch.Tensor,
                 dct_clip: int) -> torch.Tensor:
    """(B, 4, H, W) target: RGB in [0,1] plus the coefficient plane clipped
    to +-dct_clip and scaled to [-1, 1]."""
    dct = torch.clamp(dct_plane.float(), -dct_clip, dct_clip) / dct_clip
    return torch.cat([image01, dct.unsqueeze(1)], dim=1)


def loss_reconstruction(recon: torch.Tensor, recon_shuffled: torch.Tensor,
                        target: torch.Tensor, channels: int = 4) -> torch.Tensor:
    """Mean absolute error of both reconstructions against the target,
    summed. ``channels=3`` restricts supervision to the RGB image."""
    if recon.shape != target.shape:
        raise ValueError(f"shape mismatch {tuple(recon.shape)} vs {tuple(target.shape)}")
    a = (recon[:, :channels] - target[:, :channels]).abs().mean()
    b = (recon_shuffled[:, :channels] - target[:, :channels]).abs().mean()
    return a + b


# -- forgery localization ----------------------------------------------


def lovasz_grad(gt_sorted: torch.Tensor) -> torch.Tensor:
    """Gradient vector of the Lovasz extension of the Jaccard loss for
    ground truth sorted by decreasing error."""
    gts = gt_sorted.sum()
    intersection = gts - gt_sorted.cumsum(0)
    union = gts + (1 - gt_sorted).cumsum(0)
    jaccard = 1.0 - intersection / union
    if gt_sorted.numel() > 1:
        jaccard = torch.cat([jaccard[:1], jaccard[1:] - jaccard[:-1]])
    return jaccard


def lovasz_term(logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Lovasz extension over tampered-class probability errors, per image,
    averaged over the batch.

    logits: (B, 2, H, W); target: (B, H, W) in {0, 1}. A perfectly inverted
    prediction scores 1 (the Jaccard loss of getting every pixel wrong).
    """
    probs = torch.softmax(logits, dim=1)[:, 1]
    losses = []
    for b in range(logits.shape[0]):
        y = target[b].reshape(-1).to(probs.dtype)
        errors = (y - probs[b].reshape(-1)).abs()
        errors_sorted, order = torch.sort(errors, descending=True)
        losses.append(torch.dot(errors_sorted, lovasz_grad(y[order])))
    return torch.stack(losses).mean()


def loss_forgery(logits: torch.Tensor, target: torch.Tensor,
                 ce_weight: float = 1.0,
                 class_weights: tuple[float, float] | None = None) -> torch.Tensor:
    """Pixel cross-entropy plus the Lovasz Jaccard surrogate."""
    w = None
    if class_weights is not None:
        w = torch.as_tensor(class_weights, dtype=logits.dtype)
    ce = F.cross_entropy(logits, target.long(), weight=w)
    return ce_weight * ce + lovasz_term(logits, target)


# -- within-image contrastive ------------------------------------------


def supcon_loss(embeddings: torch.Tensor, labels: torch.Tensor,
                normalize: bool = True) -> torch.Tensor:
    """Class-balanced supervised contrastive loss over one pixel set.

    Sum over anchors of -mean_positives log(exp(z.p) / sum_{a != z} exp(z.a)).
    Anchors without positives contribute nothing; a single-class set scores 0.
    """
    if embeddings.shape[0] != labels.shape[0]:
        raise ValueError("one label per embedding required")
    n = embeddings.shape[0]
    if n < 2:
        return embeddings.sum() * 0.0
    e = F.normalize(embeddings, dim=1) if normalize else embeddings
    sim = e @ e.T
    eye = torch.eye(n, dtype=torch.bool)
    denom = torch.logsumexp(sim.masked_fill(eye, float("-inf")), dim=1)
    pos = (labels.view(-1, 1) == labels.view(1, -1)) & ~eye
    n_pos = pos.sum(dim=1)
    log_prob = sim - denom.view(-1, 1)
    anchor_loss = -(log_prob * pos).sum(dim=1) / n_pos.clamp_min(1)
    return anchor_loss[n_pos > 0].sum()


def sample_pixel_set(labels_flat: torch.Tensor, cap: int,
                     generator: torch.Generator) -> torch.Tensor:
    """Balanced per-class sampling: up to ``cap`` indices per present class."""
    picks = []
    for cls in (0, 1):
        idx = torch.nonzero(labels_flat == cls, as_tuple=False).flatten()
        if idx.numel() == 0:
            continue
        k = min(cap, idx.numel())
        perm = torch.randperm(idx.numel(), generator=generator)[:k]
        picks.append(idx[perm])
    return torch.cat(picks) if picks else torch.empty(0, dtype=torch.long)


def loss_contrastive(pyramid, target: torch.Tensor, n: int,
                     generator: torch.Generator | None = None,
                     normalize: bool = True) -> torch.Tensor:
    """Within-image contrastive loss summed over pyramid levels and batch.

    ``target`` is the (B, H, W) forgery mask; per level it is area-pooled to
    feature resolution. Images with a single class at a level contribute 0.
    """
    if generator is None:
        generator = torch.Generator().manual_seed(0)
    total = None
    for feat in pyramid:
        stride = target.shape[1] // feat.shape[2]
        y = downsample_mask(target.unsqueeze(1).float(), stride).squeeze(1)
        for b in range(feat.shape[0]):
            labels = y[b].reshape(-1).long()
            if labels.min() == labels.max():
                continue
            sel = sample_pixel_set(labels, n, generator)
            emb = feat[b].flatten(1).T[sel]
            term = supcon_loss(emb, labels[sel], normalize=normalize)
            total = term if total is None else total + term
    if total is None:
        total = pyramid[0].sum() * 0.0
    return total


# -- aggregate ----------------------------------------------------------


def total_loss(weights: LossWeights,
               alignment: torch.Tensor | float = 0.0,
               reconstruction: torch.Tensor | float = 0.0,
               forgery: torch.Tensor | float = 0.0,
               contrastive: torch.Tensor | float = 0.0,
               ) -> tuple[torch.Tensor, LossReport]:
    """Weighted sum; raises NonFiniteLoss with per-term diagnostics."""
    terms = {"alignment": alignment, "reconstruction": reconstruction,
             "forgery": forgery, "contrastive": contrastive}
    values = {}
    for name, term in terms.items():
        value = float(term) if not torch.is_tensor(term) else float(term.detach())
        if not (value == value and abs(value) != float("inf")):
            raise NonFiniteLoss(f"{name} term is {value}")
        values[name] = value
    total = (weights.alignment * _as_tensor(alignment)
             + weights.reconstruction * _as_tensor(reconstruction)
             + weights.forgery * _as_tensor(forgery)
             + weights.contrastive * _as_tensor(contrastive))
    report = LossReport(
        alignment=values["alignment"], reconstruction=values["reconstruction"],
        forgery=values["forgery"], contrastive=values["contrastive"],
        total=float(total.detach()))
    return total, report


def _as_tensor(x) -> torch.Tensor:
    return x if torch.is_tensor(x) else torch.tensor(float(x))
