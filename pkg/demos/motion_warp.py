"""Bilinear warping and the motion compensator at initialization.

A constant flow should undo a constant shift, and a freshly built
compensator should pass frames through untouched (its flow heads start
at zero, so there is nothing to warp by yet).
"""

import numpy as np
import torch

from waveletgan.motion import MotionCompensator, MotionConfig, compensate_window, warp
from waveletgan.synthetic import make_sequence


def main():
    frames = make_sequence("walk", 3, 32, 32, seed=11, max_step=2)
    target = torch.from_numpy(frames[1].samples).reshape(1, 1, 32, 32)
    prev = torch.from_numpy(frames[0].samples).reshape(1, 1, 32, 32)

    # hand-built flow: shift the previous frame by one pixel right
    flow = torch.zeros(1, 2, 32, 32, dtype=target.dtype)
    flow[:, 0] = 1.0
    shifted = warp(prev, flow)
    print("one-pixel warp moves the frame:",
          f"max change {(shifted - prev).abs().max().item():.4f}")

    # zero flow is a true no-op, bit for bit
    same = warp(prev, torch.zeros_like(flow))
    print("zero flow is the identity:", torch.equal(same, prev))

    # the full compensator starts as the identity too
    motion = MotionCompensator(MotionConfig(channels=(8, 12, 8)))
    neighbors = torch.stack([prev, torch.from_numpy(frames[2].samples)
                             .reshape(1, 1, 32, 32)], dim=1)
    warped, flows = compensate_window(target, neighbors, motion)
    print("compensator at init leaves neighbors alone:",
          torch.equal(warped, neighbors))
    print("predicted flow magnitude at init:",
          max(f.abs().max().item() for f in flows))

    # after nudging the coarsest flow head, neighbors start to move
    with torch.no_grad():
        motion.stacks[-1][-1].bias.fill_(0.3)
    warped, _ = compensate_window(target, neighbors, motion)
    print("after a bias nudge the warp engages:",
          f"max change {(warped - neighbors).abs().max().item():.4f}")


if __name__ == "__main__":
    main()
