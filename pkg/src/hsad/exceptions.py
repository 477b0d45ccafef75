"""Exception hierarchy.

The CLI maps these onto exit codes: usage/parameter problems exit 2,
data problems exit 3, numerical failures exit 4.
"""


class HsadError(Exception):
    """Base class for all package errors."""


class ParameterError(HsadError, ValueError):
    """An argument is outside its documented range."""


class FormatError(HsadError, ValueError):
    """A file header is missing a key or has an unparsable value."""


class SizeError(FormatError):
    """A raw file does not hold the number of bytes its header implies."""


class DataError(HsadError, ValueError):
    """Input values are invalid (e.g. NaN or Inf)."""


class ShapeError(HsadError, ValueError):
    """Array dimensions disagree."""


class EvaluationError(HsadError, ValueError):
    """A metric cannot be computed for the given truth (e.g. one class only)."""


class GenerationError(HsadError, RuntimeError):
    """Synthetic scene generation could not satisfy its constraints."""


class SingularityError(HsadError, ArithmeticError):
    """A covariance matrix could not be factorized."""
