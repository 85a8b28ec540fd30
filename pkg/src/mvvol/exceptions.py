"""Exception hierarchy.

Every error raised on purpose by the package derives from ``MvVolError`` so
callers (and the CLI) can separate them from programming errors.  Numeric
failures additionally derive from ``NumericError``; input problems from
``InputError``.
"""


class MvVolError(Exception):
    """Base class for all package errors."""


class InputError(MvVolError, ValueError):
    """Bad user input: shapes, missing cells, invalid configuration."""


class NumericError(MvVolError, ArithmeticError):
    """A numerical procedure could not produce a valid result."""


class NotPositiveDefinite(NumericError):
    pass


class NonPositiveDiagonal(NumericError):
    pass


class DegenerateColumn(NumericError):
    pass


class ZeroNormColumn(NumericError):
    pass


class SingularDesign(NumericError):
    pass


class SingularGamma0(NumericError):
    pass


class FilterBlowup(NumericError):
    """Variance overflow or a non-PD correlation matrix inside the filter."""


class FilterBlowupAtOptimum(FilterBlowup):
    pass


class HessianNotPD(NumericError):
    pass


class ExplosiveParameters(NumericError):
    pass


class NonPositivePrice(InputError):
    pass


class EmptyIntersection(InputError):
    pass


class TooShort(InputError):
    pass


class WindowTooLong(InputError):
    pass


class TooFewReplications(InputError):
    pass


class InvalidParams(InputError):
    pass


class NotNested(InputError):
    pass


class ParseError(InputError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
