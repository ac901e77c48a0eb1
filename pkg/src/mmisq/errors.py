"""Exception types raised across the package."""


class MmisqError(Exception):
    """Base class for all package errors."""


class NegativeRate(MmisqError, ValueError):
    pass


class RowSumViolation(MmisqError, ValueError):
    pass


class Reducible(MmisqError, ValueError):
    pass


class SingularSystem(MmisqError, ArithmeticError):
    pass


class NegativeTime(MmisqError, ValueError):
    pass


class DimensionMismatch(MmisqError, ValueError):
    pass


class InvalidHorizon(MmisqError, ValueError):
    pass


class EventOverflow(MmisqError, RuntimeError):
    """The event cap of a single path was hit."""


class SpecMismatch(MmisqError, ValueError):
    pass


class InsufficientPaths(MmisqError, ValueError):
    pass


class NonpositiveAlpha(MmisqError, ValueError):
    pass


class NonpositiveB(MmisqError, ValueError):
    pass


class OdeStepFailure(MmisqError, ArithmeticError):
    pass


class DegenerateInput(MmisqError, ValueError):
    pass


class ConfigError(MmisqError, ValueError):
    """Invalid run configuration; the message names the offending key."""
