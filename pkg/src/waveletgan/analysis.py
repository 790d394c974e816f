"""Subband energy reports, PSNR, and whole-sequence enhancement.

All statistics here run in float64 numpy regardless of how the networks
were trained, so reports are stable across model precision. Energy rows
follow the convention of the transform module: per-frame band energy is the
plain sum of squared coefficients, and a sequence's figure is the mean over
its frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .data import ManifestEntry, load_pair, parse_manifest, windows_from_frames
from .motion import compensate_window
from .training import TrainState
from .wavelet import Frame, band_labels, subband_energy, subband_histogram, wpt_forward

PSNR_CAP = 99.0


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0, cap: float = PSNR_CAP) -> float:
    """Peak signal-to-noise ratio in dB, capped at `cap` (identical inputs
    would otherwise be infinite)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return cap
    return min(10.0 * math.log10(peak * peak / mse), cap)


def sequence_band_energy(frames: list[Frame], level: int) -> dict[str, float]:
    """Mean per-frame band energy over a sequence, keyed by band label."""
    if not frames:
        raise ValueError("empty sequence")
    totals = {label: 0.0 for label in band_labels(level)}
    for frame in frames:
        for label, value in subband_energy(wpt_forward(frame, level)).items():
            totals[label] += value
    return {label: value / len(frames) for label, value in totals.items()}


def sequence_band_histogram(
    frames: list[Frame],
    level: int,
    bin_count: int,
    value_range: tuple[float, float] = (-2.0, 2.0),
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Coefficient histograms aggregated over all frames of a sequence."""
    if not frames:
        raise ValueError("empty sequence")
    edges = None
    totals: dict[str, np.ndarray] = {}
    for frame in frames:
        edges, counts = subband_histogram(wpt_forward(frame, level), bin_count,
                                          value_range)
        for label, c in counts.items():
            totals[label] = c if label not in totals else totals[label] + c
    return edges, totals


@dataclass
class EnergyRow:
    sequence: str
    role: str
    qp: int
    band: str
    mean_energy: float


def energy_report(entries: list[ManifestEntry], level: int) -> list[EnergyRow]:
    rows = []
    for entry in entries:
        pair = load_pair(entry.compressed, entry.groundtruth, entry.qp)
        for role, frames in (("compressed", pair.compressed),
                             ("groundtruth", pair.groundtruth)):
            for band, energy in sequence_band_energy(frames, level).items():
                rows.append(EnergyRow(pair.seq_id, role, entry.qp, band, energy))
    return rows


def write_energy_csv(rows: list[EnergyRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write("sequence,role,qp,band,mean_energy\n")
        for r in rows:
            f.write(f"{r.sequence},{r.role},{r.qp},{r.band},{r.mean_energy!r}\n")
    return path


def analyze_manifest(
    manifest_path,
    level: int,
    bin_count: int,
    out_dir,
    value_range: tuple[float, float] = (-2.0, 2.0),
) -> dict[str, Path]:
    """Produce energy.csv and histogram.csv for every manifest entry."""
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    entries = parse_manifest(manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    energy_rows = []
    hist_lines = []
    for entry in entries:
        pair = load_pair(entry.compressed, entry.groundtruth, entry.qp)
        for role, frames in (("compressed", pair.compressed),
                             ("groundtruth", pair.groundtruth)):
            for band, energy in sequence_band_energy(frames, level).items():
                energy_rows.append(EnergyRow(pair.seq_id, role, entry.qp, band, energy))
            edges, counts = sequence_band_histogram(frames, level, bin_count,
                                                    value_range)
            for band, c in counts.items():
                for i, count in enumerate(c):
                    if count:
                        hist_lines.append(
                            f"{pair.seq_id},{role},{entry.qp},{band},"
                            f"{edges[i]!r},{edges[i + 1]!r},{count}\n"
                        )

    energy_path = write_energy_csv(energy_rows, out_dir / "energy.csv")
    hist_path = out_dir / "histogram.csv"
    with open(hist_path, "w") as f:
        f.write("sequence,role,qp,band,bin_left,bin_right,count\n")
        f.writelines(hist_lines)
    return {"energy": energy_path, "histogram": hist_path}


# ---------------------------------------------------------------------------
# enhancement


def _pad_to_multiple(arr: np.ndarray, multiple: int) -> tuple[np.ndarray, tuple[int, int]]:
    h, w = arr.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph or pw:
        arr = np.pad(arr, ((0, ph), (0, pw)), mode="symmetric")
    return arr, (h, w)


def enhance_sequence(
    state: TrainState,
    frames: list[Frame],
    groundtruth: list[Frame] | None = None,
) -> tuple[list[Frame], list[dict] | None]:
    """Enhance every frame of a sequence with a trained (or fresh) model.

    Frames are padded symmetrically to a multiple of 8 for the transforms
    and cropped back afterwards. Output samples are *not* clamped -- that
    happens at serialization -- but the PSNR rows (returned when
    groundtruth is given) measure the clamped signal, which is what ends up
    in files.
    """
    if not frames:
        raise ValueError("empty sequence")
    if groundtruth is not None and len(groundtruth) != len(frames):
        raise ValueError("groundtruth length does not match sequence")
    n = state.generator.config.n_neighbors
    windows = windows_from_frames(frames, n)
    state.generator.eval()
    state.motion.eval()
    enhanced = []
    with torch.no_grad():
        for window in windows:
            padded, (h, w) = _pad_to_multiple(
                np.asarray(window.target.samples, dtype=np.float32), 8)
            target = torch.from_numpy(padded).reshape(1, 1, *padded.shape)
            neigh = torch.stack([
                torch.from_numpy(_pad_to_multiple(
                    np.asarray(f.samples, dtype=np.float32), 8)[0])
                for f in window.neighbors
            ]).reshape(1, len(window.neighbors), 1, *padded.shape)
            warped, _ = compensate_window(target, neigh, state.motion)
            _, out = state.generator(target, warped)
            enhanced.append(
                Frame(samples=out[0, 0, :h, :w].numpy(),
                      seq_id=window.target.seq_id,
                      index=window.target.index)
            )
    rows = None
    if groundtruth is not None:
        rows = []
        for comp, enh, gt in zip(frames, enhanced, groundtruth):
            rows.append({
                "index": comp.index,
                "psnr_compressed": psnr(np.clip(comp.samples, 0, 1), gt.samples),
                "psnr_enhanced": psnr(np.clip(enh.samples, 0, 1), gt.samples),
            })
    return enhanced, rows


def write_psnr_csv(rows: list[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write("index,psnr_compressed,psnr_enhanced\n")
        for r in rows:
            f.write(f"{r['index']},{r['psnr_compressed']!r},{r['psnr_enhanced']!r}\n")
    return path
