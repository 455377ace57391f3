"""Exception hierarchy shared by all stages.

The CLI maps these onto exit codes: ``DataValidationError`` -> 2,
``NumericalError`` (and subclasses) -> 3.
"""


class TactileFlowError(Exception):
    """Base class for every error raised by this package."""


class DataValidationError(TactileFlowError, ValueError):
    """Input data or configuration violates a documented invariant."""


class NumericalError(TactileFlowError, ArithmeticError):
    """A numerical procedure could not produce a valid result."""


class FitError(NumericalError):
    """Ellipsoid fit failed (degenerate layout or non-ellipsoidal solution)."""
