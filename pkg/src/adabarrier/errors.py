"""Exception hierarchy.

Two families: ``InputError`` for anything the caller handed us that violates a
precondition, and ``NumericalError`` for breakdowns discovered while computing.
The CLI maps them to exit codes 3 and 4 respectively.
"""


class AdaBarrierError(Exception):
    """Base class for every error raised by this package."""


class InputError(AdaBarrierError, ValueError):
    pass


class NumericalError(AdaBarrierError, ArithmeticError):
    pass


class InvalidDimension(InputError):
    pass


class InvalidBounds(InputError):
    pass


class InvalidRadius(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class OutOfRange(InputError):
    pass


class OutsideDomain(InputError):
    pass


class RankDeficient(InputError):
    pass


class InvalidData(InputError):
    pass


class InvalidParameter(InputError):
    pass


class InfeasibleStart(InputError):
    pass


class IllConditionedMetric(NumericalError):
    pass


class IllConditionedKKT(NumericalError):
    pass


class FactorizationFailure(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class InnerLoopExceeded(NumericalError):
    pass


class NonFiniteValue(NumericalError):
    pass


class InvariantViolation(NumericalError):
    """A per-iteration guarantee of the method failed to hold numerically."""
