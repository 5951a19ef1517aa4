"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad parameter value, unknown tag or key."""


class SolverError(RuntimeError):
    """Iterative solver failed to reach the requested tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class OracleError(RuntimeError):
    """Reference computation diverged or produced an unusable value."""
