"""Divergence and beam-quality figures of paraxial OAM beams from their LG spectra."""
from .errors import (
    ConvergenceError,
    DegenerateBeam,
    DegenerateVector,
    DomainError,
    InternalError,
    QuadratureFailure,
    TruncationError,
    VortexDivError,
)
from .spectrum import BeamGeometry, ModeIndex, ModeSpectrum

__version__ = "0.1.0"

__all__ = [
    "BeamGeometry",
    "ConvergenceError",
    "DegenerateBeam",
    "DegenerateVector",
    "DomainError",
    "InternalError",
    "ModeIndex",
    "ModeSpectrum",
    "QuadratureFailure",
    "TruncationError",
    "VortexDivError",
    "__version__",
]
