"""Exception types shared across the package."""


class QZDError(Exception):
    """Base class for errors raised by this package."""


class NotHermitian(QZDError, ValueError):
    pass


class DimMismatch(QZDError, ValueError):
    pass


class IndexOutOfRange(QZDError, IndexError):
    pass


class SystemTooSmall(QZDError, ValueError):
    pass


class ShapeMismatch(QZDError, ValueError):
    pass


class NotProjector(QZDError, ValueError):
    pass


class ConfigInvalid(QZDError, ValueError):
    pass


class CalibrationFailed(QZDError, RuntimeError):
    pass


class DegenerateProbability(QZDError, ValueError):
    pass


class ThresholdNotBracketed(QZDError, RuntimeError):
    pass


class FitDiverged(QZDError, RuntimeError):
    """Raised only on request; fit_ramsey reports non-convergence via a flag."""
