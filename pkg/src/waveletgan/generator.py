"""Wavelet-residual generator.

The generator takes the compressed target frame plus its motion-aligned
neighbors, moves everything into the level-1 packet domain, and predicts a
*residual* for the target's four subbands. Residual blocks do their dense
convolutions inside a further packet decomposition (WDRB), so halving the
spatial extent quadruples the channel count instead of discarding detail
the way strided pooling would.

Both outputs of the forward pass describe the same enhanced frame: the
subband stack S = wpt(V) + R and the pixel frame O = V + iwpt(R). Computing
O from the residual rather than as iwpt(S) keeps zero-residual enhancement
bit-exact, which makes "a freshly initialized model changes nothing"
actually testable; the two forms agree to float rounding because the
transform is linear.

Ablation variants of the residual block are built in: "rrdb" keeps the
dense blocks but skips the packet decomposition, "cnn" swaps the
decomposition for average pooling and nearest-neighbor upsampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .errors import StructureError
from .wavelet import HAAR, WaveletFilter, iwpt_channels, wpt_channels

VARIANTS = ("wdrb", "rrdb", "cnn")


@dataclass(frozen=True)
class GeneratorConfig:
    n_neighbors: int = 1
    channels: int = 64
    num_blocks: int = 4
    dense_blocks: int = 2
    dense_layers: int = 3
    growth: int = 32
    residual_scale: float = 0.2
    variant: str = "wdrb"
    negative_slope: float = 0.2

    def __post_init__(self):
        if self.n_neighbors < 1:
            raise ValueError(f"n_neighbors must be >= 1, got {self.n_neighbors}")
        for name in ("channels", "num_blocks", "dense_blocks", "dense_layers", "growth"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 < self.residual_scale <= 1:
            raise ValueError(f"residual_scale must be in (0, 1], got {self.residual_scale}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


class DenseBlock(nn.Module):
    """Densely connected convolutions with a scaled local skip."""

    def __init__(self, channels: int, layers: int, growth: int,
                 scale: float, negative_slope: float):
        super().__init__()
        self.scale = scale
        self.convs = nn.ModuleList(
            nn.Conv2d(channels + i * growth, growth, 3, padding=1) for i in range(layers)
        )
        self.fusion = nn.Conv2d(channels + layers * growth, channels, 3, padding=1)
        self.act = nn.LeakyReLU(negative_slope)

    def forward(self, x):
        feats = [x]
        for conv in self.convs:
            feats.append(self.act(conv(torch.cat(feats, dim=1))))
        return x + self.scale * self.fusion(torch.cat(feats, dim=1))


class WDRB(nn.Module):
    """Wavelet dense residual block (with rrdb / cnn ablation variants).

    The dense path ends in a zero-initialized tail convolution, so a fresh
    block is the identity map no matter what the dense weights are.
    """

    def __init__(self, channels: int, config: GeneratorConfig,
                 filt: WaveletFilter = HAAR):
        super().__init__()
        self.variant = config.variant
        self.scale = config.residual_scale
        self.filt = filt
        inner = 4 * channels if config.variant == "wdrb" else channels
        self.blocks = nn.ModuleList(
            DenseBlock(inner, config.dense_layers, config.growth,
                       config.residual_scale, config.negative_slope)
            for _ in range(config.dense_blocks)
        )
        self.tail = nn.Conv2d(inner, inner, 3, padding=1)
        nn.init.zeros_(self.tail.weight)
        nn.init.zeros_(self.tail.bias)

    def forward(self, x):
        if self.variant == "wdrb":
            b = wpt_channels(x, 1, self.filt)
        elif self.variant == "cnn":
            b = F.avg_pool2d(x, 2)
        else:
            b = x
        for block in self.blocks:
            b = block(b)
        b = self.tail(b)
        if self.variant == "wdrb":
            r = iwpt_channels(b, 1, self.filt)
        elif self.variant == "cnn":
            r = F.interpolate(b, scale_factor=2, mode="nearest")
        else:
            r = b
        return x + self.scale * r


class WaveletGenerator(nn.Module):
    """Predicts enhanced subbands and the enhanced frame.

    Inputs: the compressed target (B, 1, H, W) and its motion-aligned
    neighbors (B, 2N, 1, H, W). Outputs: the enhanced subband stack
    (B, 4, H/2, W/2) and the enhanced frame (B, 1, H, W).
    """

    def __init__(self, config: GeneratorConfig | None = None,
                 filt: WaveletFilter = HAAR):
        super().__init__()
        self.config = config or GeneratorConfig()
        self.filt = filt
        cfg = self.config
        frames = 2 * cfg.n_neighbors + 1
        c = cfg.channels
        self.head = nn.Sequential(
            nn.Conv2d(4 * frames, c, 3, padding=1),
            nn.LeakyReLU(cfg.negative_slope),
            nn.Conv2d(c, c, 3, padding=1),
            nn.LeakyReLU(cfg.negative_slope),
        )
        self.blocks = nn.ModuleList(WDRB(c, cfg, filt) for _ in range(cfg.num_blocks))
        self.out = nn.Conv2d(c, 4, 3, padding=1)
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    def forward(self, target: torch.Tensor, aligned: torch.Tensor):
        cfg = self.config
        if target.ndim != 4 or target.shape[1] != 1:
            raise StructureError(f"expected target (B,1,H,W), got {tuple(target.shape)}")
        if aligned.ndim != 5 or aligned.shape[2] != 1:
            raise StructureError(
                f"expected aligned neighbors (B,2N,1,H,W), got {tuple(aligned.shape)}"
            )
        if aligned.shape[1] != 2 * cfg.n_neighbors:
            raise StructureError(
                f"expected {2 * cfg.n_neighbors} aligned neighbors, got {aligned.shape[1]}"
            )
        if aligned.shape[0] != target.shape[0] or aligned.shape[-2:] != target.shape[-2:]:
            raise StructureError(
                f"target/neighbor mismatch: {tuple(target.shape)} vs {tuple(aligned.shape)}"
            )
        stack = torch.cat((target, aligned.flatten(1, 2)), dim=1)
        feats = self.head(wpt_channels(stack, 1, self.filt))
        for block in self.blocks:
            feats = block(feats)
        residual = self.out(feats)
        subbands = wpt_channels(target, 1, self.filt) + residual
        frame = target + iwpt_channels(residual, 1, self.filt)
        return subbands, frame
