"""Exception hierarchy shared by all modules."""


class WCEL0Error(Exception):
    """Base class for package errors."""


class ParameterError(WCEL0Error, ValueError):
    """An argument is outside its valid range."""


class DimensionError(WCEL0Error, ValueError):
    """Array sizes do not match the operator."""


class CapExceededError(WCEL0Error):
    """A dense/brute-force routine was asked for a problem larger than its cap."""


class DivergenceError(WCEL0Error, ArithmeticError):
    """The solver produced a non-finite objective."""


class ParseError(WCEL0Error, ValueError):
    """An input file is malformed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
