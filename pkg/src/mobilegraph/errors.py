class InvalidInput(ValueError):
    """Raised when arguments violate an operation's preconditions."""


class ResourceLimit(RuntimeError):
    """Raised when an exact O(N^2) path is asked for more vertices than allowed."""


class ConfigError(ValueError):
    """Raised for unreadable or inconsistent run configuration."""
