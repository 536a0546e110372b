"""Exception types shared across the package."""


class AqkaError(Exception):
    """Base class for all package errors."""


class InvalidInput(AqkaError):
    """An argument violates a documented precondition."""


class NotPositiveDefinite(AqkaError):
    """A matrix expected to be positive definite failed factorization."""


class DegenerateWeights(AqkaError):
    """All allocation weights are zero; no allocation target exists."""


class ConvergenceFailure(AqkaError):
    """Iterative solver hit its iteration cap before meeting tolerance.

    Carries the best iterate found so far in ``fit``.
    """

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class EmptyDataset(AqkaError):
    """A filtering step removed every data point."""


class ParseError(AqkaError):
    """A file failed to parse; ``line`` holds the 1-based offending line."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class ConfigError(AqkaError):
    """An experiment configuration is invalid or references unknown names."""


class RegularityViolation(AqkaError):
    """A regularity assumption required by a bound does not hold."""
