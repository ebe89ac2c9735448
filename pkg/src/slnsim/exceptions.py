"""Shared exception types."""


class ConfigurationError(ValueError):
    """A run or object configuration is inconsistent, unsafe or out of range."""
