"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid physical or run configuration."""


class NumericalError(RuntimeError):
    """A linear-algebra step failed or hit a singular point."""
