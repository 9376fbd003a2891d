"""Exception and warning types shared across the package."""


class GrasspceError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GrasspceError, ValueError):
    """Operands live in incompatible spaces."""


class CutLocusError(GrasspceError, ArithmeticError):
    """Logarithmic map requested outside its injectivity domain."""


class ConvergenceError(GrasspceError, RuntimeError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class FitError(GrasspceError, ValueError):
    """A regression or decomposition problem is ill-posed as stated."""


class FormatError(GrasspceError, ValueError):
    """A binary container is malformed, truncated, or of an unsupported version."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SpreadWarning(UserWarning):
    """Data spans more of the manifold than the local maps can guarantee."""


class ExtrapolationWarning(UserWarning):
    """An input lies outside the support of the training distribution."""
