"""Exception types raised across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where a formula is defined."""


class InvariantError(ValueError):
    """A state object violates a physical invariant (trace, positivity, norm)."""


class IntegrationError(RuntimeError):
    """The adaptive integrator could not advance the solution.

    Parameters
    ----------
    message : str
        Solver diagnostic.
    t_fail : float
        Time at which the integrator stopped.
    """

    def __init__(self, message, t_fail):
        super().__init__(f"{message} (at t={t_fail!r} s)")
        self.t_fail = t_fail


class ConfigError(ValueError):
    """Configuration is missing a field or holds an invalid value."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message

    def to_dict(self):
        return {"error": "config", "field": self.field, "message": self.message}
