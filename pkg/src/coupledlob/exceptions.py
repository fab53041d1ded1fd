"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when a configuration value violates its documented constraints."""


class DataError(ValueError):
    """Raised when input data violates a documented precondition."""


class OneSidedBookError(RuntimeError):
    """Raised when an order book density has no interior zero crossing."""


class SimulationError(RuntimeError):
    """Raised when a simulation cannot proceed; carries a diagnostic snapshot."""

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = snapshot
