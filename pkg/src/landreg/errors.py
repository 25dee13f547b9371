"""Exception types raised across the package.

Every error the library raises deliberately derives from ``LandregError``,
so callers can catch one base class at an API boundary. The CLI maps these
onto its exit-code contract (see ``landreg.cli``).
"""

from __future__ import annotations


class LandregError(Exception):
    """Base class for all errors raised by landreg."""


class FormatError(LandregError):
    """A file is malformed or does not match the expected on-disk format."""


class InvalidParameterError(LandregError):
    """A parameter value violates its invariants (non-finite, scale <= 0, ...)."""


class InvalidDataError(LandregError):
    """Volume data violates an operation's precondition (NaN, non-binary mask)."""


class DecompositionError(LandregError):
    """The matrix does not factor as rotation times positive diagonal scale."""


class CorrespondenceError(LandregError):
    """Paired point sets (or samples) disagree in length or labeling."""


class DegenerateConfigurationError(LandregError):
    """Point configuration too degenerate to fit (too few or collinear points)."""


class NoFeatureError(LandregError):
    """A binary mask contains no feature voxels."""


class OutOfBoundsError(LandregError):
    """A landmark lies outside the volume it should be placed in."""


class DegenerateGeometryError(LandregError):
    """Volume geometry too small for the requested map (single-voxel grid)."""


class DivergenceError(LandregError):
    """Optimization produced a non-finite loss."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class InsufficientSampleError(LandregError):
    """A statistical test needs more samples than were supplied."""


class DegenerateTestError(LandregError):
    """A statistical test is undefined for the supplied data (zero variance)."""
