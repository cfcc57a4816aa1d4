"""Exception hierarchy shared across the package."""


class SkewTrichError(Exception):
    """Base class for all package errors."""


class TimeOrderError(SkewTrichError, ValueError):
    pass


class DomainError(SkewTrichError, ValueError):
    pass


class DimensionError(SkewTrichError, ValueError):
    pass


class EmptyGridError(SkewTrichError, ValueError):
    pass


class SpaceMismatchError(SkewTrichError, ValueError):
    pass


class IndexKindError(SkewTrichError, TypeError):
    pass


class FamilyCountError(SkewTrichError, ValueError):
    pass


class IncompatibleFamiliesError(SkewTrichError):
    """Raised when projection families fail the compatibility regime a check requires."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ScopeMismatchError(SkewTrichError, ValueError):
    pass


class NonConvergenceError(SkewTrichError, ArithmeticError):
    pass


class TailUnboundedError(SkewTrichError):
    pass


class NoDeltaError(SkewTrichError, ValueError):
    pass


class HypothesisFailError(SkewTrichError):
    """One of the integral-characterization hypotheses could not be established."""

    def __init__(self, which, message=None):
        super().__init__(message or f"hypothesis ({which}) not satisfied on the grid")
        self.which = which


class ParamError(SkewTrichError, ValueError):
    pass


class ConfigError(SkewTrichError, ValueError):
    def __init__(self, message, field=None, line=None):
        loc = []
        if field is not None:
            loc.append(f"field {field!r}")
        if line is not None:
            loc.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.field = field
        self.line = line
