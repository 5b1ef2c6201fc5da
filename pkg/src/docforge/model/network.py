"""The forgery localization network.

A U-shaped model with two encoders and two decoders. RGB and DCT feature
pyramids are fused per level as rgb + gate * dct, where the gate is one
scalar per sample: the predicted probability that the image's pixel grid
still matches its historical 8x8 compression grid. Fused features are split
pointwise into content/forgery halves; the reconstruction decoder (training
only) rebuilds the image and its coefficient plane from content plus
(optionally spatially shuffled) forgery features, while the localization
decoder turns forgery features into a tamper map, modulated by cosine
similarity against a background "pristine prototype".
"""

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ShapeError
from .blocks import ConvBlock, downsample_mask, upsample2
from .config import ModelConfig


@dataclass
class ForwardOutputs:
    logits: torch.Tensor                      # (B, 2, H, W)
    mask: torch.Tensor                        # (B, H, W) argmax
    align_score: torch.Tensor                 # (B,) in (0, 1) or constant
    align_logits: torch.Tensor | None         # (B, 2); None for fixed gates
    forgery_pyramid: list                     # decoder stages, deepest first
    pristine_maps: list = field(default_factory=list)   # (B, 1, h, w) each
    prototype_fallback: torch.Tensor | None = None      # (B, L) bool
    recon: torch.Tensor | None = None         # (B, 4, H, W)
    recon_shuffled: torch.Tensor | None = None


class RgbEncoder(nn.Module):
    """Strided stack; block i maps the gated level-i sum to level i+1.

    The stem also sees a fixed high-pass residual of the input: forgery
    seams and noise-pattern mismatches live in the residual, which a shallow
    toy encoder would otherwise have to spend capacity rediscovering."""

    def __init__(self, channels):
        super().__init__()
        self.stem = ConvBlock(6, channels[0], stride=2)
        self.fuse_blocks = nn.ModuleList(
            ConvBlock(channels[i], channels[i + 1], stride=2)
            for i in range(len(channels) - 1))

    def forward(self, image, dct_pyramid=None, gate=None):
        residual = image - F.avg_pool2d(image, 3, stride=1, padding=1)
        u = self.stem(torch.cat([image, residual * 4.0], dim=1))
        fused = []
        for i in range(len(self.fuse_blocks) + 1):
            if dct_pyramid is not None:
                u = u + gate.view(-1, 1, 1, 1) * dct_pyramid[i]
            fused.append(u)
            if i < len(self.fuse_blocks):
                u = self.fuse_blocks[i](u)
        return fused


class DctEncoder(nn.Module):
    """Embeds clipped coefficients and quantization steps, plus an
    intra-block position tag on nonzero coefficients, then strides down to
    pyramid resolution.

    The tile layout puts one block's 64 coefficients in each 8x8 tile, so a
    plane pixel's frequency identity is its position mod 8; tagging nonzero
    coefficients with it lets small kernels see per-frequency statistics.
    Gating the tag by nonzeroness keeps all-zero planes (with flat tables)
    embedding to constant maps."""

    def __init__(self, channels, dct_clip: int, qt_clip: int, embed_dim: int):
        super().__init__()
        self.dct_clip = dct_clip
        self.qt_clip = qt_clip
        self.coeff_embed = nn.Embedding(2 * dct_clip + 1, embed_dim)
        self.qt_embed = nn.Embedding(qt_clip + 1, embed_dim)
        self.pos_embed = nn.Embedding(64, embed_dim)
        dims = (embed_dim,) + tuple(channels)
        self.blocks = nn.ModuleList(
            ConvBlock(dims[i], dims[i + 1], stride=2)
            for i in range(len(channels)))

    def forward(self, dct_plane, qt_plane):
        raw = dct_plane.long()
        c = torch.clamp(raw, -self.dct_clip, self.dct_clip) + self.dct_clip
        q = torch.clamp(qt_plane.long(), 1, self.qt_clip)
        hh, ww = c.shape[-2:]
        rows = torch.arange(hh, device=c.device) % 8
        cols = torch.arange(ww, device=c.device) % 8
        pos = rows.view(-1, 1) * 8 + cols.view(1, -1)
        nonzero = (raw != 0).unsqueeze(-1).float()
        emb = (self.coeff_embed(c) + self.qt_embed(q)
               + self.pos_embed(pos) * nonzero)
        h = emb.permute(0, 3, 1, 2)
        pyramid = []
        for block in self.blocks:
            h = block(h)
            pyramid.append(h)
        return pyramid


class AlignmentHead(nn.Module):
    """Mean+std pooling -> 2-layer head -> 2-way logits. The std channel
    keeps distributional cues a plain average would wash out."""

    def __init__(self, c: int):
        super().__init__()
        self.fc1 = nn.Linear(2 * c, c)
        self.fc2 = nn.Linear(c, 2)

    def forward(self, feat: torch.Tensor) -> torch.Tensor:
        mean = feat.mean(dim=(2, 3))
        std = feat.var(dim=(2, 3), unbiased=False).clamp_min(1e-10).sqrt()
        return self.fc2(F.gelu(self.fc1(torch.cat([mean, std], dim=1))))


class Decoupler(nn.Module):
    """Pointwise 2-layer perceptron per level: C -> 2C, split into content
    and forgery halves. Disabled: content is zeros, forgery passes through."""

    def __init__(self, channels, enabled: bool = True):
        super().__init__()
        self.enabled = enabled
        if enabled:
            self.mlps = nn.ModuleList(
                nn.Sequential(nn.Conv2d(c, 2 * c, 1), nn.GELU(),
                              nn.Conv2d(2 * c, 2 * c, 1))
                for c in channels)

    def forward(self, pyramid):
        if not self.enabled:
            return [torch.zeros_like(f) for f in pyramid], list(pyramid)
        content, forgery = [], []
        for mlp, feat in zip(self.mlps, pyramid):
            both = mlp(feat)
            c = feat.shape[1]
            content.append(both[:, :c])
            forgery.append(both[:, c:])
        return content, forgery


class Decoder(nn.Module):
    """U-shaped decoder over an L-level pyramid; returns one feature map per
    stage, deepest first, ending at stride 2."""

    def __init__(self, channels):
        super().__init__()
        rev = list(reversed(channels))           # C_L .. C_1
        self.entry = ConvBlock(rev[0], rev[0])
        self.stages = nn.ModuleList(
            ConvBlock(rev[i] + rev[i + 1], rev[i + 1])
            for i in range(len(rev) - 1))

    def forward(self, pyramid):
        feats = [self.entry(pyramid[-1])]
        for i, stage in enumerate(self.stages):
            skip = pyramid[-2 - i]
            up = upsample2(feats[-1])
            feats.append(stage(torch.cat([up, skip], dim=1)))
        return feats


class ReconstructionHead(nn.Module):
    """Final upsample to full resolution; RGB channels in [0,1] via sigmoid,
    the coefficient channel in [-1,1] via tanh."""

    def __init__(self, cin: int):
        super().__init__()
        self.conv1 = ConvBlock(cin, cin)
        self.conv2 = nn.Conv2d(cin, 4, 3, padding=1, padding_mode="replicate")

    def forward(self, feat):
        x = self.conv2(self.conv1(upsample2(feat)))
        return torch.cat([torch.sigmoid(x[:, :3]), torch.tanh(x[:, 3:])], dim=1)


def shuffle_forgery(pyramid, seed: int):
    """Independent uniform spatial permutation per level; channels move
    together; deterministic given the seed."""
    out = []
    for lvl, feat in enumerate(pyramid):
        b, c, h, w = feat.shape
        gen = torch.Generator().manual_seed((int(seed) * 1009 + lvl) & 0x7FFFFFFF)
        perm = torch.randperm(h * w, generator=gen)
        out.append(feat.flatten(2)[:, :, perm].reshape(b, c, h, w))
    return out


def pristine_prototype(feat: torch.Tensor, bg_mask: torch.Tensor):
    """Masked mean of feature vectors over background positions.

    feat: (B, C, h, w); bg_mask: (B, 1, h, w) in {0,1} at the same
    resolution. Empty masks fall back to the global mean and are flagged.
    """
    if feat.shape[2:] != bg_mask.shape[2:]:
        raise ShapeError("mask and features must share spatial size")
    weight = bg_mask.float()
    count = weight.sum(dim=(2, 3))                         # (B, 1)
    masked = (feat * weight).sum(dim=(2, 3))               # (B, C)
    fallback = (count.squeeze(1) == 0)
    if fallback.any():
        global_mean = feat.mean(dim=(2, 3))
        proto = torch.where(fallback.unsqueeze(1), global_mean,
                            masked / count.clamp_min(1.0))
    else:
        proto = masked / count
    return proto, fallback


def pristine_map(feat: torch.Tensor, proto: torch.Tensor) -> torch.Tensor:
    """Per-pixel cosine similarity to the prototype, in [-1, 1];
    zero feature vectors map to 0."""
    dots = (feat * proto.unsqueeze(-1).unsqueeze(-1)).sum(dim=1, keepdim=True)
    norms = feat.norm(dim=1, keepdim=True).clamp_min(1e-12)
    pnorm = proto.norm(dim=1).clamp_min(1e-12).view(-1, 1, 1, 1)
    return dots / (norms * pnorm)


class PointwiseMlp(nn.Module):
    def __init__(self, cin: int, cout: int, hidden: int = 16):
        super().__init__()
        self.net = nn.Sequential(nn.Conv2d(cin, hidden, 1), nn.GELU(),
                                 nn.Conv2d(hidden, cout, 1))

    def forward(self, x):
        return self.net(x)


class ForgeryLocalizer(nn.Module):
    """Full network; see the module docstring for the data flow."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        config.validate()
        self.config = config
        ch = config.channels
        self.rgb_encoder = RgbEncoder(ch)
        if config.use_dct:
            self.dct_encoder = DctEncoder(ch, config.dct_clip, config.qt_clip,
                                          config.dct_embed_dim)
            self.align_head = AlignmentHead(ch[-1])
        else:
            self.dct_encoder = None
            self.align_head = None
        self.decoupler = Decoupler(ch, enabled=config.hcd_enabled)
        self.loc_decoder = Decoder(ch)
        if config.hcd_enabled:
            self.recon_decoder = Decoder(ch)
            self.recon_head = ReconstructionHead(ch[0])
        else:
            self.recon_decoder = None
            self.recon_head = None
        if config.ppe_enabled:
            self.scale_mlp = PointwiseMlp(config.levels, ch[0])
            self.bias_mlp = PointwiseMlp(config.levels, ch[0])
        else:
            self.scale_mlp = None
            self.bias_mlp = None
        self.seg_head = nn.Conv2d(ch[0], 2, 1)

    # -- pieces ---------------------------------------------------------

    def _check_input(self, image: torch.Tensor) -> None:
        if image.dim() != 4 or image.shape[1] != 3:
            raise ShapeError(f"expected (B, 3, H, W) image, got {tuple(image.shape)}")
        s = self.config.stride
        if image.shape[2] % s or image.shape[3] % s:
            raise ShapeError(f"H, W must be multiples of {s}")

    def encode_rgb(self, image: torch.Tensor):
        """Pure RGB pyramid (no DCT contribution)."""
        self._check_input(image)
        return self.rgb_encoder(image)

    def encode_dct(self, dct_plane: torch.Tensor, qt_plane: torch.Tensor):
        if self.dct_encoder is None:
            raise ShapeError("model built without a DCT branch")
        return self.dct_encoder(dct_plane, qt_plane)

    def predict_alignment(self, dct_top: torch.Tensor) -> torch.Tensor:
        """Probability the historical block grid is intact."""
        return torch.softmax(self.align_head(dct_top), dim=-1)[:, 1]

    def _gate(self, dct_pyramid, gate_mode: str, batch: int):
        if gate_mode == "fixed_0":
            return torch.zeros(batch), None
        if gate_mode == "fixed_1":
            return torch.ones(batch), None
        logits = self.align_head(dct_pyramid[-1])
        return torch.softmax(logits, dim=-1)[:, 1], logits

    def fuse_forward(self, image, dct_plane=None, qt_plane=None,
                     gate_mode: str | None = None,
                     gate_value: float | None = None):
        """Fused pyramid plus (gate, alignment logits)."""
        self._check_input(image)
        mode = gate_mode or self.config.gate_mode
        if self.dct_encoder is None or (mode == "fixed_0" and gate_value is None):
            # gate stuck at zero: the DCT branch cannot influence anything
            return self.rgb_encoder(image), torch.zeros(image.shape[0]), None
        dct_pyr = self.dct_encoder(dct_plane, qt_plane)
        if gate_value is not None:
            gate = torch.full((image.shape[0],), float(gate_value))
            logits = None
        else:
            gate, logits = self._gate(dct_pyr, mode, image.shape[0])
        return self.rgb_encoder(image, dct_pyr, gate), gate, logits

    def decouple(self, fused_pyramid):
        return self.decoupler(fused_pyramid)

    def reconstruct(self, pyramid) -> torch.Tensor:
        """(B, 4, H, W) reconstruction from a content+forgery pyramid."""
        if self.recon_decoder is None:
            raise ShapeError("model built without a reconstruction branch")
        return self.recon_head(self.recon_decoder(pyramid)[-1])

    def modulated_head(self, stages, bg_mask):
        """Pristine-prototype modulation and segmentation logits at stride 2.

        Returns (logits, pristine_maps, fallback_flags)."""
        pen = stages[-1]
        maps, flags = [], []
        if self.config.ppe_enabled:
            for feat in stages:
                mask_i = downsample_mask(bg_mask, bg_mask.shape[2] // feat.shape[2])
                proto, fb = pristine_prototype(feat, mask_i)
                maps.append(pristine_map(feat, proto))
                flags.append(fb)
            stacked = torch.cat([
                m if m.shape[2:] == pen.shape[2:]
                else F.interpolate(m, size=pen.shape[2:], mode="bilinear",
                                   align_corners=False)
                for m in maps], dim=1)
            scale = self.scale_mlp(stacked)
            bias = self.bias_mlp(stacked)
            modulated = pen * scale + bias
            fallback = torch.stack(flags, dim=1)
        else:
            modulated = pen
            fallback = None
        return self.seg_head(modulated), maps, fallback

    # -- full passes ------------------------------------------------------

    def forward(self, image, dct_plane=None, qt_plane=None, bg_mask=None,
                gate_mode: str | None = None, shuffle_seed: int | None = None,
                run_recon: bool = True) -> ForwardOutputs:
        fused, gate, align_logits = self.fuse_forward(
            image, dct_plane, qt_plane, gate_mode)
        content, forgery = self.decoupler(fused)
        stages = self.loc_decoder(forgery)
        if bg_mask is None:
            bg_mask = torch.ones(image.shape[0], 1, *image.shape[2:])
        logits, maps, fallback = self.modulated_head(stages, bg_mask)
        logits = F.interpolate(logits, size=image.shape[2:], mode="bilinear",
                               align_corners=False)

        recon = recon_sh = None
        if run_recon and self.recon_decoder is not None:
            seed = self.config.shuffle_seed if shuffle_seed is None else shuffle_seed
            rec_in = [c + f for c, f in zip(content, forgery)]
            shuffled = shuffle_forgery(forgery, seed)
            rec_sh_in = [c + f for c, f in zip(content, shuffled)]
            recon = self.reconstruct(rec_in)
            recon_sh = self.reconstruct(rec_sh_in)

        return ForwardOutputs(
            logits=logits,
            mask=logits.argmax(dim=1).to(torch.uint8),
            align_score=gate,
            align_logits=align_logits,
            forgery_pyramid=stages,
            pristine_maps=maps,
            prototype_fallback=fallback,
            recon=recon,
            recon_shuffled=recon_sh,
        )
