"""Shared exception types.

All user-facing failures raise one of these so the CLI can map them to a
machine-readable error report.
"""


class RadialSLEError(Exception):
    """Base class for package errors."""


class DomainError(RadialSLEError):
    """Invalid parameter domain (kappa, r, angles, probabilities...)."""


class ConvergenceError(RadialSLEError):
    """An iterative evaluation failed to reach its tolerance."""


class GeometryError(RadialSLEError):
    """Lattice-domain construction or loop tracing is inconsistent."""


class ConfigError(RadialSLEError):
    """Bad experiment configuration (unknown keys, conflicting values)."""


class SizeLimitError(RadialSLEError):
    """Requested exact computation exceeds the combinatorial guard."""
