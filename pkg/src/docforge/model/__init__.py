"""Forgery localization network, checkpointing and inference."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import GATE_MODES, ModelConfig
from .inference import conform, infer, infer_arrays, tensors_from_arrays
from .network import (ForgeryLocalizer, ForwardOutputs, pristine_map,
                      pristine_prototype, shuffle_forgery)

__all__ = [
    "GATE_MODES", "ForgeryLocalizer", "ForwardOutputs", "ModelConfig",
    "conform", "infer", "infer_arrays", "load_checkpoint", "pristine_map",
    "pristine_prototype", "save_checkpoint", "shuffle_forgery",
    "tensors_from_arrays",
]
