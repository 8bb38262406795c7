"""Exception hierarchy shared by every module."""


class MMDERError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(MMDERError, ValueError):
    """Operand shapes are incompatible."""


class ContractError(MMDERError, ValueError):
    """A precondition of an operation was violated."""


class GradientError(MMDERError, RuntimeError):
    """Misuse of the gradient tape (non-scalar loss, double backward, ...)."""


class DataError(MMDERError):
    """Input data on disk is missing, malformed or inconsistent."""

    def __init__(self, message, clip_id=None):
        if clip_id is not None:
            message = f"[{clip_id}] {message}"
        super().__init__(message)
        self.clip_id = clip_id


class NumericError(MMDERError, ArithmeticError):
    """A computation produced non-finite values."""
