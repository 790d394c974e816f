"""Multi-level wavelet discriminator.

One scoring head per scale: level 0 sees the raw frame, level l >= 1 sees
its 4**l packet bands, so deeper levels judge progressively coarser
structure without any pooling in the network itself (the transform does the
downscaling and keeps the detail as channels). Heads are zero-initialized,
so a fresh discriminator scores everything exactly 0 and both GAN loss
terms start from a known value.

With `use_wpt=False` the transform is replaced by average pooling whose
output is replicated across the same channel count; every convolution keeps
its shape, isolating the value of the wavelet front end for ablations.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .errors import StructureError
from .wavelet import HAAR, WaveletFilter, wpt_channels


@dataclass(frozen=True)
class DiscriminatorConfig:
    levels: int = 3
    channels: int = 64
    dilations: tuple[int, ...] = (1, 2, 4)
    use_wpt: bool = True
    negative_slope: float = 0.2

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.channels < 1:
            raise ValueError(f"channels must be >= 1, got {self.channels}")
        if not self.dilations or min(self.dilations) < 1:
            raise ValueError(f"dilations must be positive, got {self.dilations}")


class WaveletDiscriminator(nn.Module):
    def __init__(self, config: DiscriminatorConfig | None = None,
                 filt: WaveletFilter = HAAR):
        super().__init__()
        self.config = config or DiscriminatorConfig()
        self.filt = filt
        cfg = self.config
        stacks = []
        for level in range(cfg.levels):
            in_ch = 4**level
            layers = [
                nn.Conv2d(in_ch, cfg.channels, 3, padding=1),
                nn.LeakyReLU(cfg.negative_slope),
            ]
            for d in cfg.dilations:
                layers += [
                    nn.Conv2d(cfg.channels, cfg.channels, 3, padding=d, dilation=d),
                    nn.LeakyReLU(cfg.negative_slope),
                ]
            head = nn.Conv2d(cfg.channels, 1, 3, padding=1)
            nn.init.zeros_(head.weight)
            nn.init.zeros_(head.bias)
            layers.append(head)
            stacks.append(nn.Sequential(*layers))
        self.stacks = nn.ModuleList(stacks)

    def _level_input(self, frame: torch.Tensor, level: int) -> torch.Tensor:
        if level == 0:
            return frame
        if self.config.use_wpt:
            return wpt_channels(frame, level, self.filt)
        pooled = F.avg_pool2d(frame, 2**level)
        return pooled.expand(-1, 4**level, -1, -1)

    def forward(self, frame: torch.Tensor) -> list[torch.Tensor]:
        """Score a frame at every level; returns [(B, 1, H/2^l, W/2^l)]."""
        if frame.ndim != 4 or frame.shape[1] != 1:
            raise StructureError(f"expected (B,1,H,W), got {tuple(frame.shape)}")
        return [
            stack(self._level_input(frame, level))
            for level, stack in enumerate(self.stacks)
        ]

    def receptive_field(self, level: int) -> int:
        """Receptive field of one level-`level` score pixel, in frame pixels."""
        if not 0 <= level < self.config.levels:
            raise ValueError(f"level must be in [0, {self.config.levels}), got {level}")
        rf = 1 + 2  # input conv, kernel 3
        for d in self.config.dilations:
            rf += 2 * d
        rf += 2  # scoring head
        return rf * 2**level
