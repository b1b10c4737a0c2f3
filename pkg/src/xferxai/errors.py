"""Exception types shared across the package."""


class XferXaiError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(XferXaiError):
    """Shapes of two operands do not line up."""

    def __init__(self, message, expected=None, got=None):
        if expected is not None:
            message = f"{message} (expected {expected}, got {got})"
        super().__init__(message)
        self.expected = expected
        self.got = got


class NonFiniteError(XferXaiError):
    """A value that must be finite is NaN or infinite."""


class DataFormatError(XferXaiError):
    """Input file or manifest violates the declared format."""


class UndefinedValueError(XferXaiError):
    """A quantity is mathematically undefined for the given inputs."""


class DivergenceError(XferXaiError):
    """An iterative procedure failed to make progress."""
