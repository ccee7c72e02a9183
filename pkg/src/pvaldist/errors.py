"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class DegenerateError(DomainError):
    """The distribution has zero variance."""


class NoSaddlepointError(DomainError):
    """The target mean is outside the interior of the support hull."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class SeparationError(ConvergenceError):
    """Logistic fit diverges because the data are (quasi-)separated."""


class ConfigError(ValueError):
    """Invalid configuration document."""
