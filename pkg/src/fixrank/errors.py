"""Exception types raised across the package."""


class FixrankError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FixrankError, ValueError):
    """Malformed or out-of-contract arguments."""


class UnsupportedOperatorError(FixrankError):
    """The requested computation is not defined for this operator or input."""


class BracketError(FixrankError):
    """A bisection bracket does not satisfy its precondition."""


class IngestionError(FixrankError):
    """A data file could not be parsed or failed validation."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path
