"""Model hyperparameters."""

from dataclasses import asdict, dataclass, field

from ..errors import SpecError

GATE_MODES = ("adaptive", "fixed_0", "fixed_1")


@dataclass
class ModelConfig:
    levels: int = 4
    channels: tuple[int, ...] = (16, 32, 64, 128)   # (48, 96, 192, 384) full
    dct_clip: int = 20          # coefficients clipped to +-T before embedding
    qt_clip: int = 63           # quantization steps clipped to <= 63
    dct_embed_dim: int = 16
    use_dct: bool = True        # False drops the DCT branch entirely
    gate_mode: str = "adaptive"
    hcd_enabled: bool = True
    ppe_enabled: bool = True
    recon_targets: str = "rgb+dct"   # "rgb" reconstructs the image only
    shuffle_seed: int = 0

    def __post_init__(self):
        self.channels = tuple(int(c) for c in self.channels)
        self.validate()

    def validate(self) -> None:
        if self.levels < 2:
            raise SpecError("need at least 2 pyramid levels")
        if len(self.channels) != self.levels:
            raise SpecError("one channel count per level")
        if any(b <= a for a, b in zip(self.channels, self.channels[1:])):
            raise SpecError("channel counts must be strictly increasing")
        if self.dct_clip < 1:
            raise SpecError("dct_clip must be >= 1")
        if self.gate_mode not in GATE_MODES:
            raise SpecError(f"gate_mode must be one of {GATE_MODES}")
        if self.recon_targets not in ("rgb", "rgb+dct"):
            raise SpecError("recon_targets must be 'rgb' or 'rgb+dct'")

    @property
    def stride(self) -> int:
        return 2 ** self.levels

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "ModelConfig":
        return ModelConfig(**d)
