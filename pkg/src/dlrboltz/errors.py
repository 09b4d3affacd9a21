"""Exception types raised across the package."""


class ContractError(ValueError):
    """An operation was called with arguments that break its preconditions."""


class ConfigError(ValueError):
    """Invalid solver or experiment configuration (bad grid, CFL violation, ...)."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class DomainError(ValueError):
    """A physical quantity left its admissible range (non-positive density or temperature)."""


class IntegrationError(RuntimeError):
    """A time step produced non-finite values."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
