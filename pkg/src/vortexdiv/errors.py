"""Exception types raised across vortexdiv."""


class VortexDivError(Exception):
    """Base class for all package errors."""


class DomainError(VortexDivError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConvergenceError(VortexDivError, RuntimeError):
    """An iterative solver or series failed to converge."""


class QuadratureFailure(VortexDivError, RuntimeError):
    """Adaptive quadrature hit its refinement cap."""


class TruncationError(VortexDivError, ValueError):
    """A truncated expansion captured too little of the total norm."""

    def __init__(self, message, achieved_norm):
        super().__init__(message)
        self.achieved_norm = achieved_norm


class DegenerateBeam(VortexDivError, ValueError):
    """Beam parameters do not define a valid rms geometry."""


class DegenerateVector(VortexDivError, ValueError):
    """A parameter vector is too close to zero to project onto the sphere."""


class InternalError(VortexDivError, RuntimeError):
    """An invariant that should hold for valid input was violated."""
