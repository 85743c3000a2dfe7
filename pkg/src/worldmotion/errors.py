"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: ValidationError -> 2,
DegenerateGeometryError -> 3, OSError -> 4.
"""


class WorldMotionError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(WorldMotionError):
    """Input violates a documented schema or precondition."""


class DegenerateGeometryError(WorldMotionError):
    """Geometry is singular: parallel axes, collinear points, rank-deficient registration."""


class LowConfidenceHand(ValidationError):
    """Hand estimate below the confidence threshold; caller should keep the default wrist pose."""


class BundleError(ValidationError):
    """Estimator bundle failed validation; message names the offending file and field."""
