"""Exception types shared across the package."""


class ExoflexError(Exception):
    """Base class for all package errors."""


class DomainError(ExoflexError, ValueError):
    """An input lies outside the domain of an operation."""


class SingularConfigurationError(DomainError):
    """A planar two-link chain is at (or too close to) a singular posture."""


class DegenerateRatioError(DomainError):
    """A magnitude ratio has a zero denominator."""


class ConfigurationError(ExoflexError, ValueError):
    """A configuration object is inconsistent or invalid."""


class SimulationAbort(ExoflexError, RuntimeError):
    """The closed-loop simulation produced a non-finite state."""

    def __init__(self, message, tick=None, quantity=None):
        super().__init__(message)
        self.tick = tick
        self.quantity = quantity
