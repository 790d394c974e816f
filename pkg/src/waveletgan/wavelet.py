"""2D wavelet packet transforms with exact inverses.

The transform pair here is the backbone of everything else in the package:
the generator predicts subband residuals, the discriminator scores subband
stacks, and the analysis tools report subband energies. It is implemented
directly on torch tensors (periodic boundary, orthonormal filters) so that
gradients flow through analysis and synthesis alike, and so the same code
serves float32 network tensors and float64 analysis arrays.

Conventions, fixed across the package:

* A single decomposition step maps (..., H, W) to (..., 4, H/2, W/2) with
  bands ordered [LL, LH, HL, HH].
* The first letter of a band label is the filter applied along the row axis
  (i.e. vertically, across rows); the second letter is the column axis.
  For [[1, 2], [3, 4]] under haar this gives LL=5, LH=-1, HL=-2, HH=0.
* A level-l packet transform recurses into *every* band and produces 4**l
  equal-size bands in depth-first order: level-2 labels run LLLL, LLLH,
  LLHL, LLHH, LHLL, ... (parent-major).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .errors import DivisibilityError, StructureError

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class WaveletFilter:
    """An orthonormal analysis filter pair (lowpass, highpass)."""

    name: str
    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self):
        if len(self.low) != len(self.high):
            raise ValueError("low and high filters must have equal length")
        if len(self.low) < 2 or len(self.low) % 2 != 0:
            raise ValueError("filter length must be even and >= 2")
        lo = np.asarray(self.low, dtype=np.float64)
        hi = np.asarray(self.high, dtype=np.float64)
        for label, taps in (("low", lo), ("high", hi)):
            if abs(float(taps @ taps) - 1.0) > 1e-10:
                raise ValueError(f"{label} filter is not unit-norm")
        if abs(float(lo @ hi)) > 1e-10:
            raise ValueError("low and high filters are not orthogonal")

    def __len__(self) -> int:
        return len(self.low)


HAAR = WaveletFilter("haar", (1 / _SQRT2, 1 / _SQRT2), (1 / _SQRT2, -1 / _SQRT2))


def band_labels(level: int) -> list[str]:
    """Depth-first band labels for a level-`level` packet transform."""
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    labels = [""]
    for _ in range(level):
        labels = [parent + child for parent in labels for child in ("LL", "LH", "HL", "HH")]
    return labels


def _require_divisible(shape, level: int):
    h, w = shape[-2], shape[-1]
    step = 2**level
    if h % step != 0:
        raise DivisibilityError(f"height {h} is not divisible by {step}")
    if w % step != 0:
        raise DivisibilityError(f"width {w} is not divisible by {step}")


def _analysis_lastdim(x, filt):
    # y_lo[i] = sum_k low[k] * x[(2i + k) mod n], likewise for high.
    lo = hi = None
    for k, (fl, fh) in enumerate(zip(filt.low, filt.high)):
        xk = (torch.roll(x, -k, dims=-1) if k else x)[..., 0::2]
        lo = fl * xk if lo is None else lo + fl * xk
        hi = fh * xk if hi is None else hi + fh * xk
    return lo, hi


def _synthesis_lastdim(lo, hi, filt):
    # Adjoint of _analysis_lastdim: zero-stuff each band back to full rate,
    # then correlate with the same taps. For orthonormal filters the adjoint
    # is the exact inverse.
    n = lo.shape[-1] * 2
    zeros = torch.zeros_like(lo)
    u_lo = torch.stack((lo, zeros), dim=-1).reshape(*lo.shape[:-1], n)
    u_hi = torch.stack((hi, zeros), dim=-1).reshape(*hi.shape[:-1], n)
    out = None
    for k, (fl, fh) in enumerate(zip(filt.low, filt.high)):
        term = fl * torch.roll(u_lo, k, dims=-1) + fh * torch.roll(u_hi, k, dims=-1)
        out = term if out is None else out + term
    return out


def _analysis_rows(x, filt):
    lo, hi = _analysis_lastdim(x.transpose(-1, -2), filt)
    return lo.transpose(-1, -2), hi.transpose(-1, -2)


def dwt2(x: torch.Tensor, filt: WaveletFilter = HAAR) -> torch.Tensor:
    """One decomposition step: (..., H, W) -> (..., 4, H/2, W/2)."""
    if x.ndim < 2:
        raise StructureError(f"expected at least 2 dims, got shape {tuple(x.shape)}")
    _require_divisible(x.shape, 1)
    lo_r, hi_r = _analysis_rows(x, filt)
    ll, lh = _analysis_lastdim(lo_r, filt)
    hl, hh = _analysis_lastdim(hi_r, filt)
    return torch.stack((ll, lh, hl, hh), dim=-3)


def idwt2(bands: torch.Tensor, filt: WaveletFilter = HAAR) -> torch.Tensor:
    """Inverse of :func:`dwt2`: (..., 4, h, w) -> (..., 2h, 2w)."""
    if bands.ndim < 3 or bands.shape[-3] != 4:
        raise StructureError(f"expected (..., 4, h, w), got shape {tuple(bands.shape)}")
    ll, lh, hl, hh = bands.unbind(dim=-3)
    lo_r = _synthesis_lastdim(ll, lh, filt)
    hi_r = _synthesis_lastdim(hl, hh, filt)
    x = _synthesis_lastdim(lo_r.transpose(-1, -2), hi_r.transpose(-1, -2), filt)
    return x.transpose(-1, -2)


def wpt2(x: torch.Tensor, level: int, filt: WaveletFilter = HAAR) -> torch.Tensor:
    """Level-`level` packet transform: (..., H, W) -> (..., 4**level, h, w).

    Every band is recursively re-decomposed (a full packet tree, not the
    pyramid that only splits LL), so all output bands share one size:
    h = H / 2**level, w = W / 2**level.
    """
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    _require_divisible(x.shape, level)
    bands = dwt2(x, filt)
    for _ in range(level - 1):
        # (..., B, 4, h, w) flattened parent-major keeps depth-first order.
        bands = dwt2(bands, filt).flatten(-4, -3)
    return bands


def iwpt2(bands: torch.Tensor, filt: WaveletFilter = HAAR) -> torch.Tensor:
    """Inverse packet transform: (..., 4**level, h, w) -> (..., H, W)."""
    if bands.ndim < 3:
        raise StructureError(f"expected (..., bands, h, w), got shape {tuple(bands.shape)}")
    count = bands.shape[-3]
    level = round(math.log(count, 4)) if count > 0 else 0
    if count < 4 or 4**level != count:
        raise StructureError(f"band count {count} is not a power of 4 (>= 4)")
    x = bands
    for _ in range(level):
        x = idwt2(x.unflatten(-3, (x.shape[-3] // 4, 4)), filt)
    return x.squeeze(-3)


def wpt_channels(x: torch.Tensor, level: int, filt: WaveletFilter = HAAR) -> torch.Tensor:
    """Packet transform for feature maps: (N, C, H, W) -> (N, C * 4**level, h, w).

    Output channels are channel-major: the 4**level bands of input channel c
    occupy output channels [c * 4**level, (c + 1) * 4**level).
    """
    if x.ndim != 4:
        raise StructureError(f"expected (N, C, H, W), got shape {tuple(x.shape)}")
    bands = wpt2(x, level, filt)  # (N, C, 4**level, h, w)
    return bands.flatten(1, 2)


def iwpt_channels(x: torch.Tensor, level: int, filt: WaveletFilter = HAAR) -> torch.Tensor:
    """Inverse of :func:`wpt_channels`: (N, C * 4**level, h, w) -> (N, C, H, W)."""
    if x.ndim != 4:
        raise StructureError(f"expected (N, C*4**level, h, w), got shape {tuple(x.shape)}")
    step = 4**level
    if level < 1 or x.shape[1] % step != 0:
        raise StructureError(
            f"channel count {x.shape[1]} does not hold 4**{level} bands per channel"
        )
    return iwpt2(x.unflatten(1, (x.shape[1] // step, step)), filt)


# ---------------------------------------------------------------------------
# Frame-level API used by the data pipeline and analysis tools. These work in
# float64 numpy regardless of the input dtype, so energy reports do not drift
# with network precision.


@dataclass
class Frame:
    """A single luma frame with bookkeeping metadata.

    `samples` is an (H, W) float array; pixel values nominally live in
    [0, 1] (enhanced output may briefly overshoot before serialization).
    """

    samples: np.ndarray
    seq_id: str = ""
    index: int = 0
    qp: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 2:
            raise StructureError(f"frame samples must be 2D, got shape {arr.shape}")
        self.samples = arr

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]


@dataclass
class SubbandSet:
    """All 4**level packet bands of one frame, depth-first order."""

    level: int
    bands: np.ndarray
    seq_id: str = ""
    index: int = 0

    def __post_init__(self):
        arr = np.asarray(self.bands)
        if self.level < 1:
            raise StructureError(f"level must be >= 1, got {self.level}")
        if arr.ndim != 3 or arr.shape[0] != 4**self.level:
            raise StructureError(
                f"expected ({4**self.level}, h, w) bands for level {self.level}, "
                f"got shape {arr.shape}"
            )
        self.bands = arr

    @property
    def labels(self) -> list[str]:
        return band_labels(self.level)

    def band(self, label: str) -> np.ndarray:
        try:
            return self.bands[self.labels.index(label)]
        except ValueError:
            raise KeyError(label) from None


def wpt_forward(frame: Frame, level: int, filt: WaveletFilter = HAAR) -> SubbandSet:
    """Decompose a frame into its level-`level` packet bands (float64)."""
    arr = np.asarray(frame.samples, dtype=np.float64)
    bands = wpt2(torch.from_numpy(arr), level, filt).numpy()
    return SubbandSet(level=level, bands=bands, seq_id=frame.seq_id, index=frame.index)


def wpt_inverse(subbands: SubbandSet, filt: WaveletFilter = HAAR) -> Frame:
    """Reassemble the frame from its packet bands."""
    bands = torch.from_numpy(np.asarray(subbands.bands, dtype=np.float64))
    x = iwpt2(bands, filt).numpy()
    return Frame(samples=x, seq_id=subbands.seq_id, index=subbands.index)


def subband_energy(subbands: SubbandSet) -> dict[str, float]:
    """Sum of squared coefficients per band, keyed by label.

    For orthonormal filters the values sum to the frame's total energy
    (Parseval), which is what makes per-band energies comparable across
    compression levels.
    """
    arr = np.asarray(subbands.bands, dtype=np.float64)
    energies = np.einsum("bhw,bhw->b", arr, arr)
    return dict(zip(subbands.labels, (float(e) for e in energies)))


def subband_histogram(
    subbands: SubbandSet,
    bin_count: int = 201,
    value_range: tuple[float, float] = (-2.0, 2.0),
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Per-band coefficient histograms over shared bin edges.

    Bins are right-closed: a coefficient lands in (edges[i], edges[i+1]],
    except the first bin which also takes its left edge. Values outside the
    range are counted in the nearest edge bin, so each band's counts always
    sum to its coefficient count. Returns (edges, {label: counts}).
    """
    if bin_count < 2:
        raise ValueError(f"bin_count must be >= 2, got {bin_count}")
    lo, hi = value_range
    if not lo < hi:
        raise ValueError(f"value_range must be increasing, got {value_range}")
    edges = np.linspace(lo, hi, bin_count + 1)
    counts: dict[str, np.ndarray] = {}
    for label, band in zip(subbands.labels, subbands.bands):
        idx = np.searchsorted(edges, np.asarray(band, dtype=np.float64).ravel(), side="left") - 1
        idx = np.clip(idx, 0, bin_count - 1)
        counts[label] = np.bincount(idx, minlength=bin_count).astype(np.int64)
    return edges, counts
