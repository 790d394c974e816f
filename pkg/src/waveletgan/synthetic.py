"""Deterministic synthetic sequences and degradations.

Everything here exists so tests and demos can exercise the full pipeline
without shipping video data: textured frames with global motion, plus two
degradation models (a JPEG roundtrip, whose quantization removes high-band
detail the way a real codec does, and a blur+noise model that is easier
for a small generator to invert).
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from .data import ClipWindow, SequencePair, make_clip_windows
from .wavelet import Frame

TEXTURE_NOISE_SIGMA = 0.04
JPEG_QUALITY_MILD = 60
JPEG_QUALITY_STRONG = 20


def texture_canvas(height: int, width: int, rng: np.random.Generator,
                   noise_sigma: float = TEXTURE_NOISE_SIGMA) -> np.ndarray:
    """A textured grayscale field: smooth large-scale structure + fine grain."""
    smooth = gaussian_filter(rng.normal(size=(height, width)), sigma=6.0, mode="wrap")
    smooth /= max(float(smooth.std()), 1e-12)
    img = 0.5 + 0.15 * smooth + rng.normal(scale=noise_sigma, size=(height, width))
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def make_sequence(
    seq_id: str,
    length: int,
    height: int,
    width: int,
    seed: int,
    max_step: int = 2,
    noise_sigma: float = TEXTURE_NOISE_SIGMA,
) -> list[Frame]:
    """A pristine sequence: one texture viewed through a drifting window."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    margin = max_step * length + 4
    canvas = texture_canvas(height + 2 * margin, width + 2 * margin, rng, noise_sigma)
    oy, ox = margin, margin
    frames = []
    for t in range(length):
        frames.append(
            Frame(samples=canvas[oy : oy + height, ox : ox + width].copy(),
                  seq_id=seq_id, index=t)
        )
        oy = int(np.clip(oy + rng.integers(-max_step, max_step + 1), 0, 2 * margin))
        ox = int(np.clip(ox + rng.integers(-max_step, max_step + 1), 0, 2 * margin))
    return frames


def degrade_jpeg(frame: Frame, quality: int) -> Frame:
    """Compress a frame through an in-memory JPEG roundtrip."""
    arr = np.clip(np.asarray(frame.samples, dtype=np.float64), 0.0, 1.0)
    img = Image.fromarray(np.floor(arr * 255.0 + 0.5).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="JPEG", quality=quality)
    buf.seek(0)
    decoded = np.asarray(Image.open(buf), dtype=np.float32) / 255.0
    return Frame(samples=decoded, seq_id=frame.seq_id, index=frame.index, qp=frame.qp)


def degrade_blur_noise(
    frame: Frame,
    seed: int,
    blur_sigma: float = 1.2,
    noise_sigma: float = 0.02,
) -> Frame:
    """Blur, add noise, and re-quantize to 8 bits."""
    rng = np.random.default_rng(seed)
    arr = gaussian_filter(np.asarray(frame.samples, dtype=np.float64), sigma=blur_sigma)
    arr = arr + rng.normal(scale=noise_sigma, size=arr.shape)
    arr = np.clip(arr, 0.0, 1.0)
    arr = np.floor(arr * 255.0 + 0.5) / 255.0
    return Frame(samples=arr.astype(np.float32), seq_id=frame.seq_id,
                 index=frame.index, qp=frame.qp)


def make_jpeg_pair(
    seq_id: str,
    length: int,
    size: int,
    seed: int,
    quality: int,
    qp: int | None = None,
) -> SequencePair:
    """Ground truth plus its JPEG-degraded copy, tagged with a qp label."""
    gt = make_sequence(seq_id, length, size, size, seed)
    if qp is None:
        qp = 100 - quality
    comp = []
    for f in gt:
        g = degrade_jpeg(f, quality)
        g.qp = qp
        comp.append(g)
    return SequencePair(compressed=comp, groundtruth=gt, qp=qp)


def make_blur_pair(
    seq_id: str,
    length: int,
    size: int,
    seed: int,
    blur_sigma: float = 1.2,
    noise_sigma: float = 0.02,
    qp: int = 0,
) -> SequencePair:
    gt = make_sequence(seq_id, length, size, size, seed)
    comp = [
        degrade_blur_noise(f, seed=seed * 1000 + i, blur_sigma=blur_sigma,
                           noise_sigma=noise_sigma)
        for i, f in enumerate(gt)
    ]
    for f in comp:
        f.qp = qp
    return SequencePair(compressed=comp, groundtruth=gt, qp=qp)


def make_smoke_windows(
    count: int = 8,
    size: int = 64,
    seed: int = 0,
    n_neighbors: int = 1,
) -> list[ClipWindow]:
    """Small fixed training set: center windows of short degraded sequences."""
    length = 2 * n_neighbors + 1
    windows = []
    for k in range(count):
        pair = make_blur_pair(f"smoke{k:02d}", length, size, seed=seed * 10007 + k)
        windows.append(make_clip_windows(pair, n_neighbors)[n_neighbors])
    return windows
