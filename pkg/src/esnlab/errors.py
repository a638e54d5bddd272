"""Exception hierarchy shared by every module."""


class EsnLabError(Exception):
    """Base class for all library errors."""


class ParameterError(EsnLabError, ValueError):
    """Invalid dimensions, ranges or hyperparameters."""


class NumericalError(EsnLabError, ArithmeticError):
    """A linear system or integral could not be evaluated reliably."""


class CapabilityError(EsnLabError):
    """The requested theory path is not available for this model cell."""


class InsufficientDataError(EsnLabError):
    """Too few samples to estimate a statistic."""


class ConfigError(EsnLabError):
    """Malformed or inconsistent experiment configuration."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)
