"""Robustness distortion battery.

Each spec is a pure, seeded transform. Geometric kinds reuse the
misalignment semantics so images and masks move under the identical map;
`transform_mask` is that map for label arrays.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import RangeError
from .jpeg import apply_geometry, decode_pixels, encode_jpeg, recompress

# the named severity codes of the gate-ablation table
TABLE_CODES = ("N-30", "B-7", "D-.7", "J-85", "C-.98", "S-1", "R-98")

_KINDS = ("clean", "gaussian_noise", "gaussian_blur", "downscale", "jpeg",
          "multi_jpeg", "crop", "shift", "resize")


@dataclass(frozen=True)
class DistortionSpec:
    kind: str
    level: float | int | tuple = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise RangeError(f"unknown distortion kind {self.kind!r}")
        k, lv = self.kind, self.level
        if k == "gaussian_noise" and not 0 <= float(lv) <= 128:
            raise RangeError(f"noise sigma {lv} outside [0, 128]")
        if k == "gaussian_blur":
            if int(lv) < 1 or int(lv) % 2 == 0:
                raise RangeError(f"blur kernel {lv} must be odd and >= 1")
        if k in ("downscale", "resize") and not 0.05 <= float(lv) <= 4:
            raise RangeError(f"scale {lv} outside [0.05, 4]")
        if k == "jpeg" and not 1 <= int(lv) <= 100:
            raise RangeError(f"jpeg quality {lv} outside [1, 100]")
        if k == "multi_jpeg":
            min_qf, count = self._multi_params()
            if not 1 <= min_qf <= 100:
                raise RangeError(f"multi_jpeg min qf {min_qf} outside [1, 100]")
            if not 1 <= count <= 10:
                raise RangeError(f"multi_jpeg count {count} outside [1, 10]")
        if k == "crop" and not 0 <= float(lv) < 0.5:
            raise RangeError(f"crop fraction {lv} outside [0, 0.5)")
        if k == "shift" and abs(int(lv)) > 64:
            raise RangeError(f"shift {lv} outside [-64, 64]")

    def _multi_params(self) -> tuple[int, int]:
        lv = self.level
        if isinstance(lv, (tuple, list)):
            return int(lv[0]), int(lv[1])
        return int(lv), 3

    @property
    def code(self) -> str:
        if self.kind == "clean":
            return "Clean"
        if self.kind == "multi_jpeg":
            mq, n = self._multi_params()
            return f"MJ-{mq}x{n}"
        prefix = {"gaussian_noise": "N", "gaussian_blur": "B", "downscale": "D",
                  "jpeg": "J", "crop": "C", "shift": "S", "resize": "R"}[self.kind]
        lv = self.level
        if self.kind == "crop":
            lv = 1 - float(lv)           # C-.98 = keep 98% per edge pair
        if self.kind == "resize":
            lv = round(float(lv) * 100)  # R-98 = scale 0.98
        if isinstance(lv, float):
            text = f"{lv:.2f}".rstrip("0").lstrip("0") or "0"
        else:
            text = str(lv)
        return f"{prefix}-{text}"

    def crop_pixels(self, side: int) -> int:
        """Per-edge crop in pixels for a given image side length."""
        return max(1, round(float(self.level) * side))

    @property
    def changes_pixels(self) -> bool:
        return self.kind in ("gaussian_noise", "gaussian_blur", "downscale")

    @property
    def changes_geometry(self) -> bool:
        return self.kind in ("crop", "shift", "resize")

    @property
    def reencodes(self) -> bool:
        return self.kind in ("jpeg", "multi_jpeg")


def blur_sigma(kernel: int) -> float:
    """The sigma convention tied to an odd kernel size."""
    return 0.3 * ((kernel - 1) * 0.5 - 1) + 0.8


def distort(image: np.ndarray, spec: DistortionSpec) -> np.ndarray:
    """Apply a distortion to an (H, W, 3) uint8 image; deterministic given
    spec.seed. JPEG kinds return the decoded pixels (use `distort_bytes` for
    the bitstream)."""
    image = np.asarray(image, dtype=np.uint8)
    kind = spec.kind
    if kind == "clean":
        return image.copy()
    if kind == "gaussian_noise":
        sigma = float(spec.level)
        if sigma == 0:
            return image.copy()
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed & 0xFFFFFFFF]))
        noisy = image.astype(np.float64) + rng.normal(0, sigma, image.shape)
        return np.clip(noisy + 0.5, 0, 255).astype(np.uint8)
    if kind == "gaussian_blur":
        k = int(spec.level)
        if k == 1:
            return image.copy()
        return cv2.GaussianBlur(image, (k, k), blur_sigma(k))
    if kind == "downscale":
        s = float(spec.level)
        if s == 1.0:
            return image.copy()
        h, w = image.shape[:2]
        small = cv2.resize(image, (max(1, round(w * s)), max(1, round(h * s))),
                           interpolation=cv2.INTER_AREA)
        return cv2.resize(small, (w, h), interpolation=cv2.INTER_LINEAR)
    if kind in ("jpeg", "multi_jpeg"):
        return decode_pixels(distort_bytes(image, spec))
    if kind == "crop":
        return apply_geometry(image, "crop", spec.crop_pixels(min(image.shape[:2])))
    if kind == "shift":
        return apply_geometry(image, "shift", int(spec.level))
    if kind == "resize":
        return apply_geometry(image, "resize", float(spec.level))
    raise RangeError(f"unknown distortion kind {kind!r}")


def distort_bytes(image: np.ndarray, spec: DistortionSpec) -> bytes:
    """JPEG bytes for the compression distortions."""
    if spec.kind == "jpeg":
        return encode_jpeg(image, int(spec.level))
    if spec.kind == "multi_jpeg":
        min_qf, max_count = spec._multi_params()
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed & 0xFFFFFFFF, 2]))
        count = int(rng.integers(1, max_count + 1))
        chain = [int(rng.integers(min_qf, 101)) for _ in range(count)]
        return recompress(image, chain).data
    raise RangeError(f"{spec.kind} does not produce a bitstream")


def transform_mask(mask: np.ndarray, spec: DistortionSpec,
                   image_shape: tuple[int, int] | None = None) -> np.ndarray:
    """Move a {0,1} mask under the spec's geometric map (identity for the
    photometric/compression kinds)."""
    mask = np.asarray(mask, dtype=np.uint8)
    if spec.kind == "crop":
        side = min(image_shape[:2] if image_shape else mask.shape[:2])
        return apply_geometry(mask, "crop", spec.crop_pixels(side))
    if spec.kind == "shift":
        return apply_geometry(mask, "shift", int(spec.level))
    if spec.kind == "resize":
        moved = apply_geometry(mask * 255, "resize", float(spec.level))
        return (moved > 127).astype(np.uint8)
    return mask.copy()


# -- battery -----------------------------------------------------------


def default_battery(seed: int = 0) -> list[DistortionSpec]:
    """Clean plus the seven named severity codes."""
    return [
        DistortionSpec("clean", seed=seed),
        DistortionSpec("gaussian_noise", 30, seed),
        DistortionSpec("gaussian_blur", 7, seed),
        DistortionSpec("downscale", 0.7, seed),
        DistortionSpec("jpeg", 85, seed),
        DistortionSpec("crop", 0.02, seed),
        DistortionSpec("shift", 1, seed),
        DistortionSpec("resize", 0.98, seed),
    ]


def battery(config: dict | str | Path | None = None) -> list[DistortionSpec]:
    """Expand a battery config into specs. Empty config -> [Clean]."""
    if isinstance(config, (str, Path)):
        config = json.loads(Path(config).read_text())
    config = config or {}
    seed = int(config.get("seed", 0))
    specs: list[DistortionSpec] = [DistortionSpec("clean", seed=seed)]
    if config.get("default", False):
        specs = default_battery(seed)
    for sweep in config.get("sweeps", ()):
        kind = sweep["kind"]
        for level in sweep["levels"]:
            lv = tuple(level) if isinstance(level, list) else level
            specs.append(DistortionSpec(kind, lv, seed))
    return specs


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float("inf")
    return 10.0 * np.log10(255.0 ** 2 / mse)
