"""Wavelet-domain GAN enhancement of compressed video.

Subpackage map:

* :mod:`waveletgan.wavelet` -- exact packet transform pair and frame-level
  subband tooling (energies, histograms).
* :mod:`waveletgan.data` -- sequence ingestion, manifests, clip windows.
* :mod:`waveletgan.synthetic` -- deterministic synthetic sequences and
  degradations for tests and demos.
* :mod:`waveletgan.motion` -- pyramid flow estimator and bilinear warping.
* :mod:`waveletgan.generator` -- wavelet-residual generator.
* :mod:`waveletgan.discriminator` -- multi-level subband discriminator.
* :mod:`waveletgan.losses` -- Charbonnier and least-squares GAN losses.
* :mod:`waveletgan.training` -- two-stage training loops and checkpoints.
* :mod:`waveletgan.analysis` -- energy reports, PSNR, sequence enhancement.
* :mod:`waveletgan.cli` -- the `waveletgan` command.
"""

from .errors import (
    CheckpointError,
    ConfigError,
    DivergenceError,
    DivisibilityError,
    IngestError,
    ManifestError,
    StructureError,
    WaveletGanError,
)
from .wavelet import HAAR, Frame, SubbandSet, WaveletFilter

__version__ = "0.1.0"

__all__ = [
    "HAAR",
    "Frame",
    "SubbandSet",
    "WaveletFilter",
    "WaveletGanError",
    "DivisibilityError",
    "StructureError",
    "IngestError",
    "ManifestError",
    "ConfigError",
    "CheckpointError",
    "DivergenceError",
    "__version__",
]
