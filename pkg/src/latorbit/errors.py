"""Exception types shared across the package.

Each error carries the exit code the command-line harness maps it to.
"""


class LatorbitError(Exception):
    exit_code = 3


class DegenerateInputError(LatorbitError, ValueError):
    """Matrix or basis is singular, rank deficient, or off the special linear group."""

    exit_code = 3


class PreconditionError(LatorbitError, ValueError):
    """A documented precondition of an operation does not hold."""

    exit_code = 2


class DivergentSeriesError(PreconditionError):
    """Exponent at or below the convergence abscissa of a norm series."""


class NoComponentError(PreconditionError):
    """The radius polynomial has no positive part for the requested data."""


class ResourceLimitError(LatorbitError):
    """A configured safety cap would be exceeded."""

    exit_code = 4


class NumericFailureError(LatorbitError):
    """An iterative routine failed to reach its tolerance."""

    exit_code = 3
