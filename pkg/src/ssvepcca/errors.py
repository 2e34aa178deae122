"""Exception types raised by the toolkit."""


class SsvepError(Exception):
    """Base class for all toolkit errors."""


class DataError(SsvepError, ValueError):
    """Input data violates a documented invariant."""


class ShapeMismatchError(DataError):
    """Array dimensions disagree with the declared or expected shape."""


class NumericalError(SsvepError, ArithmeticError):
    """A numerical routine could not produce a valid result."""
