"""Versioned checkpoint container: config echo + named parameter blobs."""

from pathlib import Path

import torch

from ..errors import SpecError
from .config import ModelConfig
from .network import ForgeryLocalizer

CHECKPOINT_VERSION = 1


def save_checkpoint(path, model: ForgeryLocalizer, step: int = 0,
                    seeds: dict | None = None, extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "state_dict": model.state_dict(),
        "step": int(step),
        "seeds": dict(seeds or {}),
        "extra": dict(extra or {}),
    }
    torch.save(payload, path)
    return path


def load_checkpoint(path, gate_mode: str | None = None
                    ) -> tuple[ForgeryLocalizer, dict]:
    """Rebuild the model; `gate_mode` optionally overrides the stored one
    (used by the gate-ablation protocol)."""
    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise SpecError(f"unsupported checkpoint version {payload.get('version')}")
    cfg = ModelConfig.from_dict(payload["config"])
    if gate_mode is not None:
        cfg.gate_mode = gate_mode
        cfg.validate()
    model = ForgeryLocalizer(cfg)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    meta = {k: payload[k] for k in ("step", "seeds", "extra")}
    return model, meta
