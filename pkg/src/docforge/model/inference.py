"""Single-image inference from JPEG bytes.

The reconstruction branch is never executed here. Images whose size is not a
multiple of the network stride are cropped at the grid origin (so historical
block-grid evidence survives) and the prediction is zero-padded back.
"""

import numpy as np
import torch

from ..jpeg import coefficient_planes, grid_crop_box, parse_jpeg
from ..synth.background import bg_mask_heuristic
from .network import ForgeryLocalizer


def tensors_from_arrays(image: np.ndarray, planes, bg_mask: np.ndarray):
    """(image u8, CoefficientPlanes, bg u8) -> model input tensors."""
    img = torch.from_numpy(np.ascontiguousarray(image)).float().permute(2, 0, 1) / 255.0
    dct = torch.from_numpy(planes.dct_plane.astype(np.int64))
    qt = torch.from_numpy(planes.qt_plane.astype(np.int64))
    bg = torch.from_numpy(np.ascontiguousarray(bg_mask)).float()
    return img.unsqueeze(0), dct.unsqueeze(0), qt.unsqueeze(0), bg.view(1, 1, *bg.shape)


def conform(image: np.ndarray, planes, masks: list[np.ndarray], stride: int):
    """Origin-anchored crop of image/planes/masks to multiples of stride."""
    h, w = grid_crop_box(image.shape[0], image.shape[1], stride)
    image = image[:h, :w]
    planes = planes.crop(0, 0, h, w)
    masks = [m[:h, :w] for m in masks]
    return image, planes, masks


@torch.no_grad()
def infer_arrays(model: ForgeryLocalizer, image: np.ndarray, planes,
                 bg_mask: np.ndarray | None = None,
                 gate_mode: str | None = None):
    """(mask (H, W) uint8, alignment score float) for in-memory inputs."""
    model.eval()
    full_h, full_w = image.shape[:2]
    if bg_mask is None:
        bg_mask = bg_mask_heuristic(image)
    image_c, planes_c, (bg_c,) = conform(image, planes, [bg_mask], model.config.stride)
    img, dct, qt, bg = tensors_from_arrays(image_c, planes_c, bg_c)
    out = model(img, dct, qt, bg, gate_mode=gate_mode, run_recon=False)
    mask = np.zeros((full_h, full_w), dtype=np.uint8)
    pred = out.mask[0].numpy()
    mask[:pred.shape[0], :pred.shape[1]] = pred
    return mask, float(out.align_score[0])


def infer(jpeg_bytes: bytes, model: ForgeryLocalizer,
          bg_mask: np.ndarray | None = None,
          gate_mode: str | None = None):
    """Parse, extract planes, and localize. Returns (mask, align_score)."""
    parsed = parse_jpeg(jpeg_bytes)
    planes = coefficient_planes(parsed)
    return infer_arrays(model, parsed.decoded_pixels, planes,
                        bg_mask=bg_mask, gate_mode=gate_mode)
