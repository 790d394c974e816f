"""Two-stage training: Charbonnier pre-training, then adversarial fine-tuning.

Stage 1 minimizes L_W + alpha * L_M over the generator and motion nets
jointly, with alpha stepping down on a fixed schedule so reconstruction
gradually outweighs alignment. Stage 2 adds the discriminator and the
adversarial term, alternating one discriminator and one generator update
per iteration on a single forward pass.

Determinism contract: a (seed, window list) pair fully determines the run.
Model init draws from torch's generator seeded with the stage seed, batch
sampling from a numpy generator carried in the TrainState, and both RNG
states ride along in checkpoints, so resuming reproduces the uninterrupted
run bit for bit.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import torch

from .data import ClipWindow, random_crop_aligned
from .discriminator import DiscriminatorConfig, WaveletDiscriminator
from .errors import CheckpointError, ConfigError, DivergenceError
from .generator import GeneratorConfig, WaveletGenerator
from .losses import (
    LossConfig,
    adversarial_loss,
    discriminator_loss,
    generator_total_loss,
    motion_loss,
    wavelet_loss,
)
from .motion import MotionCompensator, MotionConfig, compensate_window
from .wavelet import wpt_channels

LOG_HEADER = "iteration,l_w,l_m,l_adv,l_d,l_g_total"

CHECKPOINT_MAGIC = b"WVGN0001"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class StageConfig:
    stage: int
    iterations: int
    batch_size: int
    crop_size: int
    lr_initial: float
    lr_decay_factor: float = 2.0
    lr_decay_every: int = 100_000
    alpha_initial: float = 10.0
    alpha_decay_factor: float = 10.0
    alpha_decay_every: int = 50_000
    beta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ConfigError(f"stage must be 1 or 2, got {self.stage}")
        for name in ("iterations", "batch_size", "lr_decay_every", "alpha_decay_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.crop_size < 8 or self.crop_size % 8 != 0:
            raise ConfigError(
                f"crop_size must be a positive multiple of 8, got {self.crop_size}"
            )
        if self.lr_initial <= 0:
            raise ConfigError(f"lr_initial must be positive, got {self.lr_initial}")
        if self.lr_decay_factor < 1 or self.alpha_decay_factor < 1:
            raise ConfigError("decay factors must be >= 1")
        if self.alpha_initial < 0 or self.beta < 0:
            raise ConfigError("loss weights must be non-negative")
        if self.stage == 1 and self.beta != 0:
            raise ConfigError("stage 1 has no adversarial term; beta must be 0")


REFERENCE_STAGE1 = StageConfig(
    stage=1, iterations=300_000, batch_size=32, crop_size=256,
    lr_initial=2e-4, lr_decay_factor=2.0, lr_decay_every=100_000,
    alpha_initial=10.0, alpha_decay_factor=10.0, alpha_decay_every=50_000,
    beta=0.0,
)

REFERENCE_STAGE2 = StageConfig(
    stage=2, iterations=600_000, batch_size=32, crop_size=128,
    lr_initial=1e-4, lr_decay_factor=2.0, lr_decay_every=100_000,
    alpha_initial=1e-2, alpha_decay_factor=1.0, alpha_decay_every=100_000,
    beta=5e-3,
)


def desk_stage1(iterations: int = 300, batch_size: int = 4, crop_size: int = 64,
                seed: int = 0) -> StageConfig:
    """A stage-1 config sized for a single CPU: same schedule shape, tiny run."""
    return replace(
        REFERENCE_STAGE1,
        iterations=iterations, batch_size=batch_size, crop_size=crop_size,
        lr_decay_every=max(1, iterations // 3),
        alpha_decay_every=max(1, iterations // 6),
        seed=seed,
    )


def desk_stage2(iterations: int = 200, batch_size: int = 4, crop_size: int = 64,
                seed: int = 0) -> StageConfig:
    # The reference rate of 1e-4 assumes 6e5 iterations; a few hundred steps
    # need a hotter optimizer for the discriminator to move off its zero init.
    # Hotter than ~1e-3 backfires: the generator co-adapts fast enough to
    # erase the real/fake separation the discriminator is trying to learn.
    return replace(
        REFERENCE_STAGE2,
        iterations=iterations, batch_size=batch_size, crop_size=crop_size,
        lr_initial=5e-4,
        lr_decay_every=max(1, iterations // 2),
        alpha_decay_every=max(1, iterations),
        seed=seed,
    )


def desk_generator_config() -> GeneratorConfig:
    return GeneratorConfig(channels=24, num_blocks=2, dense_blocks=1,
                           dense_layers=2, growth=12)


def desk_motion_config() -> MotionConfig:
    return MotionConfig(channels=(12, 16, 12))


def desk_discriminator_config() -> DiscriminatorConfig:
    return DiscriminatorConfig(channels=20, dilations=(1, 2))


def step_decay(initial: float, factor: float, every: int, iteration: int) -> float:
    """initial / factor**(iteration // every) -- a piecewise-constant decay."""
    if iteration < 0:
        raise ValueError(f"iteration must be >= 0, got {iteration}")
    return initial / factor ** (iteration // every)


def learning_rate(config: StageConfig, iteration: int) -> float:
    return step_decay(config.lr_initial, config.lr_decay_factor,
                      config.lr_decay_every, iteration)


def alpha_weight(config: StageConfig, iteration: int) -> float:
    return step_decay(config.alpha_initial, config.alpha_decay_factor,
                      config.alpha_decay_every, iteration)


@dataclass
class TrainState:
    stage: int
    iteration: int
    generator: WaveletGenerator
    motion: MotionCompensator
    discriminator: WaveletDiscriminator | None
    opt_generator: torch.optim.Adam
    opt_discriminator: torch.optim.Adam | None
    stage_config: StageConfig
    loss_config: LossConfig
    rng: np.random.Generator
    history: list[dict] = field(default_factory=list)


def init_state(
    stage_config: StageConfig,
    *,
    gen_config: GeneratorConfig | None = None,
    motion_config: MotionConfig | None = None,
    disc_config: DiscriminatorConfig | None = None,
    loss_config: LossConfig | None = None,
) -> TrainState:
    """Fresh models and optimizers for a stage, seeded deterministically."""
    loss_config = loss_config or LossConfig()
    torch.manual_seed(stage_config.seed)
    generator = WaveletGenerator(gen_config)
    motion = MotionCompensator(motion_config)
    discriminator = None
    opt_disc = None
    if stage_config.stage == 2:
        discriminator = WaveletDiscriminator(disc_config)
        if discriminator.config.levels != loss_config.level_count:
            raise ConfigError(
                f"discriminator has {discriminator.config.levels} levels but the "
                f"loss normalizes by {loss_config.level_count}"
            )
        opt_disc = torch.optim.Adam(discriminator.parameters(),
                                    lr=stage_config.lr_initial)
    opt_gen = torch.optim.Adam(
        list(generator.parameters()) + list(motion.parameters()),
        lr=stage_config.lr_initial,
    )
    return TrainState(
        stage=stage_config.stage,
        iteration=0,
        generator=generator,
        motion=motion,
        discriminator=discriminator,
        opt_generator=opt_gen,
        opt_discriminator=opt_disc,
        stage_config=stage_config,
        loss_config=loss_config,
        rng=np.random.default_rng(stage_config.seed),
    )


def _validate_windows(windows: list[ClipWindow], config: StageConfig,
                      generator: WaveletGenerator, require_gt: bool = True):
    if not windows:
        raise ConfigError("no training windows")
    expected = 2 * generator.config.n_neighbors
    for w in windows:
        if len(w.neighbors) != expected:
            raise ConfigError(
                f"window has {len(w.neighbors)} neighbors, generator expects {expected}"
            )
        if require_gt and w.groundtruth is None:
            raise ConfigError("training windows need groundtruth frames")
        h, wd = w.target.samples.shape
        if config.crop_size > h or config.crop_size > wd:
            raise ConfigError(
                f"crop_size {config.crop_size} exceeds window frames ({h}x{wd})"
            )


def _to_tensor(arr: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32))


def _sample_batch(windows, config, rng):
    picks = rng.integers(0, len(windows), size=config.batch_size)
    targets, neighbors, gts = [], [], []
    for i in picks:
        crop = random_crop_aligned(windows[int(i)], config.crop_size,
                                   seed=int(rng.integers(0, 2**62)))
        targets.append(_to_tensor(crop.target.samples))
        neighbors.append(torch.stack([_to_tensor(f.samples) for f in crop.neighbors]))
        gts.append(_to_tensor(crop.groundtruth.samples))
    target = torch.stack(targets).unsqueeze(1)
    neigh = torch.stack(neighbors).unsqueeze(2)
    gt = torch.stack(gts).unsqueeze(1)
    return target, neigh, gt


def _finite_or_raise(name: str, value: torch.Tensor, iteration: int) -> float:
    v = float(value.detach())
    if not math.isfinite(v):
        raise DivergenceError(name, v, iteration=iteration)
    return v


class _LossLog:
    """Appends one CSV row per iteration, mirrored into state.history."""

    def __init__(self, state: TrainState, log_path):
        self.state = state
        self.file = None
        if log_path is not None:
            path = Path(log_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fresh = state.iteration == 0 or not path.exists()
            self.file = open(path, "w" if fresh else "a")
            if fresh:
                self.file.write(LOG_HEADER + "\n")

    def row(self, iteration, l_w, l_m, l_adv, l_d, l_g_total):
        entry = {
            "iteration": iteration, "l_w": l_w, "l_m": l_m,
            "l_adv": l_adv, "l_d": l_d, "l_g_total": l_g_total,
        }
        self.state.history.append(entry)
        if self.file is not None:
            self.file.write(
                f"{iteration},{l_w!r},{l_m!r},{l_adv!r},{l_d!r},{l_g_total!r}\n"
            )

    def close(self):
        if self.file is not None:
            self.file.close()


def _set_lr(optimizer, lr):
    for group in optimizer.param_groups:
        group["lr"] = lr


def train_stage1(
    windows: list[ClipWindow],
    stage_config: StageConfig,
    *,
    gen_config: GeneratorConfig | None = None,
    motion_config: MotionConfig | None = None,
    loss_config: LossConfig | None = None,
    state: TrainState | None = None,
    log_path=None,
) -> TrainState:
    """Run (or resume) stage-1 training up to stage_config.iterations."""
    if stage_config.stage != 1:
        raise ConfigError(f"train_stage1 got a stage-{stage_config.stage} config")
    if state is None:
        state = init_state(stage_config, gen_config=gen_config,
                           motion_config=motion_config, loss_config=loss_config)
    if state.stage != 1:
        raise ConfigError(f"cannot resume a stage-{state.stage} state in stage 1")
    _validate_windows(windows, stage_config, state.generator)
    log = _LossLog(state, log_path)
    try:
        while state.iteration < stage_config.iterations:
            it = state.iteration
            _set_lr(state.opt_generator, learning_rate(stage_config, it))
            target, neigh, gt = _sample_batch(windows, stage_config, state.rng)
            warped, _ = compensate_window(target, neigh, state.motion)
            subbands, _ = state.generator(target, warped)
            gt_bands = wpt_channels(gt, 1, state.generator.filt)
            iter_cfg = replace(state.loss_config,
                               alpha=alpha_weight(stage_config, it), beta=0.0)
            l_w = wavelet_loss(subbands, gt_bands, iter_cfg)
            l_m = motion_loss(warped, gt, iter_cfg)
            try:
                l_g = generator_total_loss(l_w, l_m, 0.0, iter_cfg)
            except DivergenceError as err:
                raise DivergenceError(err.term, err.value, iteration=it) from None
            state.opt_generator.zero_grad()
            l_g.backward()
            state.opt_generator.step()
            log.row(it, _finite_or_raise("l_w", l_w, it), float(l_m.detach()),
                    0.0, 0.0, float(l_g.detach()))
            state.iteration = it + 1
    finally:
        log.close()
    return state


def train_stage2(
    windows: list[ClipWindow],
    stage_config: StageConfig,
    init: TrainState,
    *,
    disc_config: DiscriminatorConfig | None = None,
    loss_config: LossConfig | None = None,
    log_path=None,
) -> TrainState:
    """Adversarial fine-tuning from a stage-1 result (or resume of stage 2).

    A stage-1 `init` contributes its generator and motion weights; the
    discriminator and both optimizers start fresh. A stage-2 `init` resumes
    in place, optimizer moments and all.
    """
    if stage_config.stage != 2:
        raise ConfigError(f"train_stage2 got a stage-{stage_config.stage} config")
    if init is None:
        raise ConfigError("stage 2 requires a stage-1 checkpoint or state to start from")
    if init.stage == 1:
        loss_config = loss_config or init.loss_config
        torch.manual_seed(stage_config.seed)
        discriminator = WaveletDiscriminator(disc_config)
        if discriminator.config.levels != loss_config.level_count:
            raise ConfigError(
                f"discriminator has {discriminator.config.levels} levels but the "
                f"loss normalizes by {loss_config.level_count}"
            )
        state = TrainState(
            stage=2,
            iteration=0,
            generator=init.generator,
            motion=init.motion,
            discriminator=discriminator,
            opt_generator=torch.optim.Adam(
                list(init.generator.parameters()) + list(init.motion.parameters()),
                lr=stage_config.lr_initial,
            ),
            opt_discriminator=torch.optim.Adam(
                discriminator.parameters(), lr=stage_config.lr_initial
            ),
            stage_config=stage_config,
            loss_config=loss_config,
            rng=np.random.default_rng(stage_config.seed),
        )
    elif init.discriminator is None or init.opt_discriminator is None:
        raise CheckpointError("stage-2 state is missing its discriminator")
    else:
        state = init
    _validate_windows(windows, stage_config, state.generator)
    log = _LossLog(state, log_path)
    try:
        while state.iteration < stage_config.iterations:
            it = state.iteration
            lr = learning_rate(stage_config, it)
            _set_lr(state.opt_generator, lr)
            _set_lr(state.opt_discriminator, lr)
            target, neigh, gt = _sample_batch(windows, stage_config, state.rng)

            warped, _ = compensate_window(target, neigh, state.motion)
            subbands, frame = state.generator(target, warped)

            real_scores = state.discriminator(gt)
            fake_scores = state.discriminator(frame.detach())
            l_d = discriminator_loss(real_scores, fake_scores, state.loss_config)
            _finite_or_raise("l_d", l_d, it)
            state.opt_discriminator.zero_grad()
            l_d.backward()
            state.opt_discriminator.step()

            gt_bands = wpt_channels(gt, 1, state.generator.filt)
            iter_cfg = replace(state.loss_config,
                               alpha=alpha_weight(stage_config, it),
                               beta=stage_config.beta)
            l_w = wavelet_loss(subbands, gt_bands, iter_cfg)
            l_m = motion_loss(warped, gt, iter_cfg)
            l_adv = adversarial_loss(state.discriminator(frame), iter_cfg)
            try:
                l_g = generator_total_loss(l_w, l_m, l_adv, iter_cfg)
            except DivergenceError as err:
                raise DivergenceError(err.term, err.value, iteration=it) from None
            state.opt_generator.zero_grad()
            l_g.backward()
            state.opt_generator.step()

            log.row(it, float(l_w.detach()), float(l_m.detach()),
                    float(l_adv.detach()), float(l_d.detach()),
                    _finite_or_raise("l_g_total", l_g, it))
            state.iteration = it + 1
    finally:
        log.close()
    return state


# ---------------------------------------------------------------------------
# checkpoints: MAGIC | sha256(payload) | torch.save payload


def save_checkpoint(state: TrainState, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "stage": state.stage,
        "iteration": state.iteration,
        "stage_config": asdict(state.stage_config),
        "loss_config": asdict(state.loss_config),
        "generator_config": asdict(state.generator.config),
        "motion_config": asdict(state.motion.config),
        "discriminator_config": (
            None if state.discriminator is None else asdict(state.discriminator.config)
        ),
        "generator": state.generator.state_dict(),
        "motion": state.motion.state_dict(),
        "discriminator": (
            None if state.discriminator is None else state.discriminator.state_dict()
        ),
        "opt_generator": state.opt_generator.state_dict(),
        "opt_discriminator": (
            None if state.opt_discriminator is None
            else state.opt_discriminator.state_dict()
        ),
        "rng_numpy": state.rng.bit_generator.state,
        "rng_torch": torch.get_rng_state(),
    }
    buf = io.BytesIO()
    torch.save(payload, buf)
    data = buf.getvalue()
    path.write_bytes(CHECKPOINT_MAGIC + hashlib.sha256(data).digest() + data)
    return path


def load_checkpoint(path) -> TrainState:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    header = len(CHECKPOINT_MAGIC) + 32
    if len(raw) < header:
        raise CheckpointError(f"checkpoint {path} is truncated")
    if raw[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file (bad magic)")
    digest = raw[len(CHECKPOINT_MAGIC) : header]
    data = raw[header:]
    if hashlib.sha256(data).digest() != digest:
        raise CheckpointError(f"checkpoint {path} failed its integrity check")
    payload = torch.load(io.BytesIO(data), weights_only=False)
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format version {version}, expected {CHECKPOINT_VERSION}"
        )

    stage_config = StageConfig(**payload["stage_config"])
    loss_config = LossConfig(**{
        **payload["loss_config"],
        "subband_weights": tuple(payload["loss_config"]["subband_weights"]),
    })
    generator = WaveletGenerator(GeneratorConfig(**payload["generator_config"]))
    motion = MotionCompensator(MotionConfig(**{
        **payload["motion_config"],
        "channels": tuple(payload["motion_config"]["channels"]),
    }))
    try:
        generator.load_state_dict(payload["generator"])
        motion.load_state_dict(payload["motion"])
    except RuntimeError as exc:
        raise CheckpointError(f"checkpoint {path} does not fit its config: {exc}") from exc

    discriminator = None
    opt_disc = None
    if payload["discriminator_config"] is not None:
        disc_cfg = payload["discriminator_config"]
        discriminator = WaveletDiscriminator(DiscriminatorConfig(**{
            **disc_cfg, "dilations": tuple(disc_cfg["dilations"]),
        }))
        try:
            discriminator.load_state_dict(payload["discriminator"])
        except RuntimeError as exc:
            raise CheckpointError(
                f"checkpoint {path} does not fit its config: {exc}"
            ) from exc
        opt_disc = torch.optim.Adam(discriminator.parameters(),
                                    lr=stage_config.lr_initial)
        opt_disc.load_state_dict(payload["opt_discriminator"])

    opt_gen = torch.optim.Adam(
        list(generator.parameters()) + list(motion.parameters()),
        lr=stage_config.lr_initial,
    )
    opt_gen.load_state_dict(payload["opt_generator"])

    rng = np.random.default_rng()
    rng.bit_generator.state = payload["rng_numpy"]
    torch.set_rng_state(payload["rng_torch"])

    return TrainState(
        stage=payload["stage"],
        iteration=payload["iteration"],
        generator=generator,
        motion=motion,
        discriminator=discriminator,
        opt_generator=opt_gen,
        opt_discriminator=opt_disc,
        stage_config=stage_config,
        loss_config=loss_config,
        rng=rng,
    )
