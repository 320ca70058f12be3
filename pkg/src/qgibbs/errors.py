"""Exception types shared across the package."""


class DivergenceError(RuntimeError):
    """A sampler or optimizer produced a non-finite state."""


class ConfigError(ValueError):
    """An invalid configuration value (bad flag, bad preset, bad key)."""


class DataError(ValueError):
    """Malformed input data (unparseable cell, missing column, blank field)."""
