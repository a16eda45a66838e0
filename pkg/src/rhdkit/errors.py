"""Exception types shared across the package."""


class RhdError(Exception):
    """Base class for all rhdkit errors."""


class DomainError(RhdError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class InadmissibleStateError(RhdError):
    """A conserved state required to be admissible (D>0, g(U)>0) is not."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class EigensystemError(RhdError):
    """Characteristic decomposition failed at an interface state."""


class StepFailure(RhdError):
    """A time step produced inadmissible cell averages."""

    def __init__(self, message, step=None, stage=None, index=None):
        super().__init__(message)
        self.step = step
        self.stage = stage
        self.index = index


class ConfigError(RhdError, ValueError):
    """Malformed configuration file or CLI arguments."""
