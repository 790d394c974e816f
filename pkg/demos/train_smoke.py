"""Run both training stages at desk scale on the bundled synthetic set.

Stage 1 fits the wavelet-reconstruction objective, stage 2 adds the
adversarial game on top of the stage-1 checkpoint. A couple of minutes
on an ordinary CPU. Writes loss curves and checkpoints under --out.
"""

import argparse
from pathlib import Path

from waveletgan.synthetic import make_smoke_windows
from waveletgan.training import (
    desk_discriminator_config,
    desk_generator_config,
    desk_motion_config,
    desk_stage1,
    desk_stage2,
    save_checkpoint,
    train_stage1,
    train_stage2,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("smoke_run"))
    ap.add_argument("--stage1-iters", type=int, default=150)
    ap.add_argument("--stage2-iters", type=int, default=100)
    args = ap.parse_args()

    windows = make_smoke_windows(count=8, size=64, seed=0)
    print(f"training set: {len(windows)} windows of "
          f"{windows[0].target.samples.shape}")

    cfg1 = desk_stage1(iterations=args.stage1_iters, batch_size=4, crop_size=64)
    state = train_stage1(
        windows, cfg1,
        gen_config=desk_generator_config(),
        motion_config=desk_motion_config(),
        log_path=args.out / "stage1_loss.csv",
    )
    def smooth(rows, key):
        return sum(r[key] for r in rows) / len(rows)

    head, tail = state.history[:10], state.history[-10:]
    print(f"stage 1: l_w {smooth(head, 'l_w'):.3f} -> {smooth(tail, 'l_w'):.3f}, "
          f"l_m {smooth(head, 'l_m'):.3f} -> {smooth(tail, 'l_m'):.3f}")
    ckpt1 = save_checkpoint(state, args.out / "stage1.bin")
    print(f"stage-1 checkpoint: {ckpt1}")

    cfg2 = desk_stage2(iterations=args.stage2_iters, batch_size=4, crop_size=64)
    state = train_stage2(
        windows, cfg2, state,
        disc_config=desk_discriminator_config(),
        log_path=args.out / "stage2_loss.csv",
    )
    head, tail = state.history[:10], state.history[-10:]
    print(f"stage 2: l_d {smooth(head, 'l_d'):.1f} -> {smooth(tail, 'l_d'):.1f}, "
          f"l_adv {smooth(head, 'l_adv'):.1f} -> {smooth(tail, 'l_adv'):.1f}")
    ckpt2 = save_checkpoint(state, args.out / "stage2.bin")
    print(f"stage-2 checkpoint: {ckpt2}")
    print(f"loss curves in {args.out}/stage1_loss.csv and stage2_loss.csv")


if __name__ == "__main__":
    main()
