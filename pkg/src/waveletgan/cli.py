"""The `waveletgan` command.

Three subcommands cover the package's external surface:

* `analyze`  -- subband energy and histogram CSVs for a manifest.
* `enhance`  -- run a checkpoint over a sequence, write PNGs (+ PSNR CSV).
* `train`    -- stage-1 or stage-2 training from a config file + manifest.

Exit codes: 0 success, 2 usage or config problems, 3 data or checkpoint
problems, 4 training divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import analyze_manifest, enhance_sequence, write_psnr_csv
from .data import (
    load_manifest_pairs,
    load_sequence,
    make_clip_windows,
    write_frames_png,
)
from .errors import (
    CheckpointError,
    ConfigError,
    DivergenceError,
    DivisibilityError,
    IngestError,
    StructureError,
)
from .generator import GeneratorConfig
from .training import (
    StageConfig,
    alpha_weight,
    learning_rate,
    load_checkpoint,
    save_checkpoint,
    train_stage1,
    train_stage2,
)

_STAGE_FIELDS = {
    "stage": int,
    "iterations": int,
    "batch_size": int,
    "crop_size": int,
    "lr_initial": float,
    "lr_decay_factor": float,
    "lr_decay_every": int,
    "alpha_initial": float,
    "alpha_decay_factor": float,
    "alpha_decay_every": int,
    "beta": float,
    "seed": int,
}
_REQUIRED_FIELDS = ("stage", "iterations", "batch_size", "crop_size", "lr_initial")


def parse_stage_config(path) -> StageConfig:
    """Read a flat `key = value` config file into a StageConfig."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path.name}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _STAGE_FIELDS:
            raise ConfigError(f"{path.name}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path.name}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _STAGE_FIELDS[key](value)
        except ValueError:
            kind = _STAGE_FIELDS[key].__name__
            raise ConfigError(
                f"{path.name}:{lineno}: {key} needs a {kind}, got {value!r}"
            ) from None
    missing = [k for k in _REQUIRED_FIELDS if k not in values]
    if missing:
        raise ConfigError(f"{path.name}: missing required keys: {', '.join(missing)}")
    return StageConfig(**values)


def _parse_dims_arg(text: str | None) -> tuple[int, int] | None:
    if text is None:
        return None
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ConfigError(f"--dims must look like 640x480, got {text!r}")
    try:
        w, h = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"--dims must look like 640x480, got {text!r}") from None
    if w < 1 or h < 1:
        raise ConfigError(f"--dims must be positive, got {text!r}")
    return (w, h)


def cmd_analyze(args) -> int:
    paths = analyze_manifest(args.manifest, args.level, args.bins, args.out)
    print(f"energy report: {paths['energy']}")
    print(f"histograms:    {paths['histogram']}")
    return 0


def cmd_enhance(args) -> int:
    state = load_checkpoint(args.ckpt)
    dims = _parse_dims_arg(args.dims)
    frames = load_sequence(args.input, dims=dims)
    groundtruth = None
    if args.gt is not None:
        groundtruth = load_sequence(args.gt, dims=dims)
        if len(groundtruth) != len(frames):
            raise IngestError(
                f"{len(frames)} input frames but {len(groundtruth)} groundtruth frames"
            )
    enhanced, rows = enhance_sequence(state, frames, groundtruth)
    out = Path(args.out)
    written = write_frames_png(enhanced, out)
    print(f"enhanced {len(written)} frames -> {out}")
    if rows is not None:
        csv_path = write_psnr_csv(rows, out / "psnr.csv")
        mean_in = sum(r["psnr_compressed"] for r in rows) / len(rows)
        mean_out = sum(r["psnr_enhanced"] for r in rows) / len(rows)
        print(f"psnr: {mean_in:.3f} dB compressed, {mean_out:.3f} dB enhanced "
              f"({csv_path})")
    return 0


def _echo_schedule(config: StageConfig) -> None:
    print(f"stage {config.stage}: {config.iterations} iterations, "
          f"batch {config.batch_size}, crop {config.crop_size}, seed {config.seed}")
    points = sorted({
        0,
        min(config.alpha_decay_every, config.iterations - 1),
        min(config.lr_decay_every, config.iterations - 1),
        config.iterations - 1,
    })
    for it in points:
        print(f"  iter {it}: lr={learning_rate(config, it):g} "
              f"alpha={alpha_weight(config, it):g} beta={config.beta:g}")


def cmd_train(args) -> int:
    config = parse_stage_config(args.config)
    if config.stage != args.stage:
        raise ConfigError(
            f"--stage {args.stage} but config file says stage {config.stage}"
        )
    if args.stage == 2 and args.init is None:
        raise ConfigError("stage 2 needs --init with a stage-1 checkpoint")

    start = load_checkpoint(args.init) if args.init is not None else None

    pairs = load_manifest_pairs(args.manifest)
    n_neighbors = (start.generator.config.n_neighbors if start is not None
                   else GeneratorConfig().n_neighbors)
    windows = []
    for pair in pairs:
        windows.extend(make_clip_windows(pair, n_neighbors))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo_schedule(config)
    log_path = out / "loss.csv"
    if args.stage == 1:
        state = train_stage1(windows, config, state=start, log_path=log_path)
    else:
        state = train_stage2(windows, config, start, log_path=log_path)
    ckpt = save_checkpoint(state, out / "checkpoint.bin")
    print(f"finished at iteration {state.iteration}; checkpoint: {ckpt}")
    print(f"loss log: {log_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waveletgan",
        description="Wavelet-domain GAN enhancement of compressed video",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="subband energy/histogram report")
    p.add_argument("--manifest", required=True, help="dataset manifest file")
    p.add_argument("--level", type=int, default=3, help="packet transform depth")
    p.add_argument("--bins", type=int, default=201, help="histogram bin count")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("enhance", help="enhance a sequence with a checkpoint")
    p.add_argument("--ckpt", required=True, help="checkpoint file")
    p.add_argument("--input", required=True, help="compressed sequence (dir or raw)")
    p.add_argument("--gt", help="optional groundtruth sequence for PSNR")
    p.add_argument("--dims", help="WxH for raw inputs")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("train", help="run one training stage")
    p.add_argument("--stage", type=int, choices=(1, 2), required=True)
    p.add_argument("--config", required=True, help="stage config file")
    p.add_argument("--manifest", required=True, help="dataset manifest file")
    p.add_argument("--init", help="checkpoint to initialize or resume from")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IngestError, CheckpointError, StructureError, DivisibilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
