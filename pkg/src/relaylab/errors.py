"""Exception types shared across relaylab."""


class RelayLabError(Exception):
    """Base class for all relaylab errors."""


class ContractViolation(RelayLabError, ValueError):
    """An argument violates a documented precondition."""


class InvalidTopologyError(RelayLabError, ValueError):
    pass


class MissingLinkError(RelayLabError, KeyError):
    pass


class EnumerationTooLargeError(RelayLabError):
    pass


class InstabilityError(RelayLabError):
    """The relay queue is unstable (lambda_1 >= mu), so the requested
    stationary quantity does not exist."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class ConfigError(RelayLabError, ValueError):
    pass


class DivergenceWarning(RuntimeWarning):
    pass
