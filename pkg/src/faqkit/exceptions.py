"""Exception types shared across the package."""

from sklearn.exceptions import NotFittedError


class ConfigurationError(ValueError):
    """Invalid option or missing configuration resource."""


class DataError(ValueError):
    """Malformed or inconsistent input data."""


__all__ = ["ConfigurationError", "DataError", "NotFittedError"]
