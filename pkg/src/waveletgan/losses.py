"""Training objectives: Charbonnier reconstruction terms and LSGAN terms.

Reduction conventions, pinned down because the tests assert exact values:

* Frobenius norms sum over every element of one sample (all channels and
  pixels, and for the GAN terms all levels); only the batch dimension is
  averaged.
* The Charbonnier terms are sqrt(sum_sq + eps^2). At zero residual this is
  exactly eps (IEEE sqrt is correctly rounded, verified in the tests), and
  its gradient there is exactly zero, so a converged model sits at a smooth
  minimum rather than an |x| kink.
* Both GAN terms carry the 1/(2L) prefactor, L being the number of
  discriminator levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .errors import DivergenceError


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 1.0
    beta: float = 0.0
    eps_motion: float = 1e-3
    eps_wavelet: float = 1e-3
    subband_weights: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)
    level_count: int = 3

    def __post_init__(self):
        if self.eps_motion <= 0 or self.eps_wavelet <= 0:
            raise ValueError("Charbonnier epsilons must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be non-negative")
        if not self.subband_weights or any(w < 0 for w in self.subband_weights):
            raise ValueError(f"bad subband weights {self.subband_weights}")
        if self.level_count < 1:
            raise ValueError(f"level_count must be >= 1, got {self.level_count}")


def motion_loss(
    compensated: torch.Tensor,
    groundtruth: torch.Tensor,
    config: LossConfig,
) -> torch.Tensor:
    """Charbonnier distance between each aligned neighbor and the target.

    compensated: (B, 2N, C, H, W), groundtruth: (B, C, H, W). The 2N
    per-neighbor distances are averaged, then the batch is averaged.
    """
    if compensated.ndim != 5 or groundtruth.ndim != 4:
        raise ValueError(
            f"expected compensated (B,2N,C,H,W) and groundtruth (B,C,H,W), got "
            f"{tuple(compensated.shape)} and {tuple(groundtruth.shape)}"
        )
    m = compensated.shape[1]
    if m < 2 or m % 2 != 0:
        raise ValueError(f"neighbor count must be even and >= 2, got {m}")
    if compensated.shape[0] != groundtruth.shape[0] or compensated.shape[2:] != groundtruth.shape[1:]:
        raise ValueError(
            f"shape mismatch: {tuple(compensated.shape)} vs {tuple(groundtruth.shape)}"
        )
    resid = compensated - groundtruth.unsqueeze(1)
    sum_sq = resid.pow(2).sum(dim=(2, 3, 4))  # (B, 2N)
    per_neighbor = torch.sqrt(sum_sq + config.eps_motion**2)
    return per_neighbor.mean()


def wavelet_loss(
    predicted: torch.Tensor,
    target: torch.Tensor,
    config: LossConfig,
) -> torch.Tensor:
    """Weighted Charbonnier distance between subband stacks (B, bands, h, w)."""
    if predicted.shape != target.shape or predicted.ndim != 4:
        raise ValueError(
            f"expected matching (B,bands,h,w) stacks, got {tuple(predicted.shape)} "
            f"and {tuple(target.shape)}"
        )
    weights = config.subband_weights
    if predicted.shape[1] != len(weights):
        raise ValueError(
            f"{predicted.shape[1]} bands but {len(weights)} subband weights"
        )
    w = torch.as_tensor(weights, dtype=predicted.dtype, device=predicted.device)
    sum_sq = (predicted - target).pow(2).mul(w.view(1, -1, 1, 1)).sum(dim=(1, 2, 3))
    return torch.sqrt(sum_sq + config.eps_wavelet**2).mean()


def _check_score_lists(a, b, config, names):
    if len(a) != config.level_count or len(b) != config.level_count:
        raise ValueError(
            f"expected {config.level_count} score maps per list, got "
            f"{len(a)} {names[0]} and {len(b)} {names[1]}"
        )
    for level, (x, y) in enumerate(zip(a, b)):
        if x.shape != y.shape:
            raise ValueError(
                f"level {level}: {names[0]} scores {tuple(x.shape)} vs "
                f"{names[1]} scores {tuple(y.shape)}"
            )


def discriminator_loss(
    real_scores: list[torch.Tensor],
    fake_scores: list[torch.Tensor],
    config: LossConfig,
) -> torch.Tensor:
    """Least-squares GAN objective for the discriminator.

    Real maps are pulled toward 1, fake maps toward 0; per-level Frobenius
    norms are summed, batch-averaged, and scaled by 1/(2L).
    """
    _check_score_lists(real_scores, fake_scores, config, ("real", "fake"))
    total = None
    for real, fake in zip(real_scores, fake_scores):
        term = (real - 1).pow(2).sum(dim=(1, 2, 3)).mean()
        term = term + fake.pow(2).sum(dim=(1, 2, 3)).mean()
        total = term if total is None else total + term
    return total / (2 * config.level_count)


def adversarial_loss(
    fake_scores: list[torch.Tensor],
    config: LossConfig,
) -> torch.Tensor:
    """The generator's side of the LSGAN game: fake maps pulled toward 1."""
    if len(fake_scores) != config.level_count:
        raise ValueError(
            f"expected {config.level_count} score maps, got {len(fake_scores)}"
        )
    total = None
    for fake in fake_scores:
        term = (fake - 1).pow(2).sum(dim=(1, 2, 3)).mean()
        total = term if total is None else total + term
    return total / (2 * config.level_count)


def _require_finite(name: str, value) -> None:
    v = float(value.detach()) if isinstance(value, torch.Tensor) else float(value)
    if v != v or v in (float("inf"), float("-inf")):
        raise DivergenceError(name, v)


def generator_total_loss(l_wavelet, l_motion, l_adversarial, config: LossConfig):
    """L_W + alpha * L_M + beta * L_Adv, refusing non-finite components."""
    _require_finite("l_w", l_wavelet)
    _require_finite("l_m", l_motion)
    _require_finite("l_adv", l_adversarial)
    return l_wavelet + config.alpha * l_motion + config.beta * l_adversarial
