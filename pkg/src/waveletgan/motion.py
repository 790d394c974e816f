"""Coarse-to-fine motion estimation and bilinear warping.

Flow is estimated on a wavelet pyramid rather than a blurred image pyramid:
level k sees the 4**k packet bands of the input, so the coarse levels reason
about halved resolutions without discarding the high-band detail. Each level
refines the upsampled flow from the level below, and each refinement stack
ends in a zero-initialized head, which makes the initial flow exactly zero
(and initial compensation exactly the identity).

Flow convention: `flow[:, 0]` is horizontal displacement (columns),
`flow[:, 1]` vertical (rows); warp() pulls, i.e. output pixel (i, j) reads
the source at (i + flow_y, j + flow_x), clamped to the frame border.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .errors import StructureError
from .wavelet import HAAR, WaveletFilter, wpt_channels


@dataclass(frozen=True)
class MotionConfig:
    levels: int = 3
    channels: tuple[int, int, int] = (32, 64, 32)
    negative_slope: float = 0.2

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if len(self.channels) != 3 or min(self.channels) < 1:
            raise ValueError(f"channels must be three positive ints, got {self.channels}")


def warp(frame: torch.Tensor, flow: torch.Tensor) -> torch.Tensor:
    """Bilinearly sample `frame` at positions displaced by `flow`.

    frame: (B, C, H, W), flow: (B, 2, H, W). Sample positions are clamped to
    the border. Zero flow reproduces the input bit-exactly, which the
    initialization guarantees of the whole model lean on.
    """
    if frame.ndim != 4 or flow.ndim != 4 or flow.shape[1] != 2:
        raise StructureError(
            f"expected frame (B,C,H,W) and flow (B,2,H,W), got "
            f"{tuple(frame.shape)} and {tuple(flow.shape)}"
        )
    if frame.shape[0] != flow.shape[0] or frame.shape[-2:] != flow.shape[-2:]:
        raise StructureError(
            f"frame/flow shape mismatch: {tuple(frame.shape)} vs {tuple(flow.shape)}"
        )
    b, c, h, w = frame.shape
    dtype, device = frame.dtype, frame.device
    grid_y = torch.arange(h, dtype=dtype, device=device).view(1, h, 1)
    grid_x = torch.arange(w, dtype=dtype, device=device).view(1, 1, w)
    xs = (grid_x + flow[:, 0]).clamp(0, w - 1)
    ys = (grid_y + flow[:, 1]).clamp(0, h - 1)

    x0 = xs.floor()
    y0 = ys.floor()
    x1 = (x0 + 1).clamp(max=w - 1)
    y1 = (y0 + 1).clamp(max=h - 1)
    wx = (xs - x0).unsqueeze(1)
    wy = (ys - y0).unsqueeze(1)

    flat = frame.reshape(b, c, h * w)

    def take(yi, xi):
        idx = (yi * w + xi).long().reshape(b, 1, h * w).expand(b, c, h * w)
        return flat.gather(2, idx).reshape(b, c, h, w)

    top = (1 - wx) * take(y0, x0) + wx * take(y0, x1)
    bottom = (1 - wx) * take(y1, x0) + wx * take(y1, x1)
    return (1 - wy) * top + wy * bottom


def upsample_flow(flow: torch.Tensor, factor: int = 2) -> torch.Tensor:
    """Upsample a flow field, scaling displacements by the same factor."""
    up = F.interpolate(flow, scale_factor=factor, mode="bilinear", align_corners=False)
    return up * factor


class MotionCompensator(nn.Module):
    """Predicts the flow aligning one neighbor frame to the target frame."""

    def __init__(self, config: MotionConfig | None = None,
                 filt: WaveletFilter = HAAR):
        super().__init__()
        self.config = config or MotionConfig()
        self.filt = filt
        c0, c1, c2 = self.config.channels
        slope = self.config.negative_slope
        stacks = []
        for level in range(self.config.levels):
            bands = 4**level
            in_ch = 2 * bands + 2  # target bands, warped neighbor bands, flow
            head = nn.Conv2d(c2, 2, 3, padding=1)
            nn.init.zeros_(head.weight)
            nn.init.zeros_(head.bias)
            stacks.append(
                nn.Sequential(
                    nn.Conv2d(in_ch, c0, 7, padding=3),
                    nn.LeakyReLU(slope),
                    nn.Conv2d(c0, c1, 5, padding=2),
                    nn.LeakyReLU(slope),
                    nn.Conv2d(c1, c2, 3, padding=1),
                    nn.LeakyReLU(slope),
                    head,
                )
            )
        self.stacks = nn.ModuleList(stacks)

    def _pyramid(self, x: torch.Tensor) -> list[torch.Tensor]:
        pyr = [x]
        for level in range(1, self.config.levels):
            pyr.append(wpt_channels(x, level, self.filt))
        return pyr

    def forward(self, target: torch.Tensor, neighbor: torch.Tensor) -> torch.Tensor:
        """Estimate flow such that warp(neighbor, flow) aligns with target."""
        if target.shape != neighbor.shape:
            raise StructureError(
                f"target/neighbor shape mismatch: {tuple(target.shape)} vs "
                f"{tuple(neighbor.shape)}"
            )
        if target.ndim != 4 or target.shape[1] != 1:
            raise StructureError(f"expected (B,1,H,W), got {tuple(target.shape)}")
        t_pyr = self._pyramid(target)
        n_pyr = self._pyramid(neighbor)
        coarsest = self.config.levels - 1
        b = target.shape[0]
        h, w = t_pyr[coarsest].shape[-2:]
        flow = torch.zeros(b, 2, h, w, dtype=target.dtype, device=target.device)
        for level in range(coarsest, -1, -1):
            if level != coarsest:
                flow = upsample_flow(flow)
            aligned = warp(n_pyr[level], flow)
            inp = torch.cat((t_pyr[level], aligned, flow), dim=1)
            flow = flow + self.stacks[level](inp)
        return flow


def compensate_window(
    target: torch.Tensor,
    neighbors: torch.Tensor,
    motion: MotionCompensator,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Align every neighbor to the target.

    target: (B, 1, H, W); neighbors: (B, M, 1, H, W). Returns the warped
    neighbors (B, M, 1, H, W) and their flows (B, M, 2, H, W).
    """
    if neighbors.ndim != 5 or neighbors.shape[2] != 1:
        raise StructureError(f"expected neighbors (B,M,1,H,W), got {tuple(neighbors.shape)}")
    if neighbors.shape[0] != target.shape[0] or neighbors.shape[-2:] != target.shape[-2:]:
        raise StructureError(
            f"target/neighbors mismatch: {tuple(target.shape)} vs {tuple(neighbors.shape)}"
        )
    warped, flows = [], []
    for m in range(neighbors.shape[1]):
        flow = motion(target, neighbors[:, m])
        warped.append(warp(neighbors[:, m], flow))
        flows.append(flow)
    return torch.stack(warped, dim=1), torch.stack(flows, dim=1)
