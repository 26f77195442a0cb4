"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter block or configuration file is invalid."""


class DomainError(ValueError):
    """A function was called outside its input domain."""


class DimensionError(ValueError):
    """Two objects that must share geometry do not."""


class GenerationError(RuntimeError):
    """Random world generation could not satisfy its constraints."""
