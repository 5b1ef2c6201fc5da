"""Small convolutional building blocks shared by the encoders/decoders."""

import torch
import torch.nn as nn
import torch.nn.functional as F


def conv3x3(cin: int, cout: int, stride: int = 1) -> nn.Conv2d:
    # replicate padding keeps constant inputs constant, which the DCT branch
    # contracts on (an all-zero plane must embed to a constant map)
    return nn.Conv2d(cin, cout, 3, stride=stride, padding=1,
                     padding_mode="replicate")


def norm(c: int) -> nn.GroupNorm:
    return nn.GroupNorm(min(8, c), c)


class ConvBlock(nn.Module):
    """conv-norm-act twice; the first conv carries the stride."""

    def __init__(self, cin: int, cout: int, stride: int = 1):
        super().__init__()
        self.conv1 = conv3x3(cin, cout, stride)
        self.norm1 = norm(cout)
        self.conv2 = conv3x3(cout, cout)
        self.norm2 = norm(cout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = F.gelu(self.norm1(self.conv1(x)))
        return F.gelu(self.norm2(self.conv2(x)))


def upsample2(x: torch.Tensor) -> torch.Tensor:
    return F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)


def downsample_mask(mask: torch.Tensor, stride: int) -> torch.Tensor:
    """Area-average a (B, 1, H, W) {0,1} mask then re-binarize at 0.5;
    keeps thin strokes better than nearest-neighbour."""
    if stride == 1:
        return (mask > 0.5).float()
    pooled = F.avg_pool2d(mask.float(), kernel_size=stride, stride=stride)
    return (pooled >= 0.5).float()
