"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or malformed configuration input."""


class ModelError(RuntimeError):
    """Model is structurally unable to produce the requested result."""
