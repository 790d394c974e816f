"""Exception types shared across the package."""


class WaveletGanError(Exception):
    """Base class for all errors raised by this package."""


class DivisibilityError(WaveletGanError):
    """A spatial dimension is not divisible by the required power of two."""


class StructureError(WaveletGanError):
    """A subband set or tensor does not have the declared structure."""


class IngestError(WaveletGanError):
    """A sequence or frame could not be loaded."""


class ManifestError(IngestError):
    """A dataset manifest line is malformed."""


class ConfigError(WaveletGanError):
    """A training config file is malformed or inconsistent."""


class CheckpointError(WaveletGanError):
    """A checkpoint file is missing, corrupt, or incompatible."""


class DivergenceError(WaveletGanError):
    """Training produced a non-finite loss."""

    def __init__(self, term: str, value: float, iteration: int | None = None):
        self.term = term
        self.value = value
        self.iteration = iteration
        where = f" at iteration {iteration}" if iteration is not None else ""
        super().__init__(f"non-finite loss{where}: {term} = {value}")
