class ConfigError(ValueError):
    """Invalid configuration value or combination."""


class DegenerateResultError(ValueError):
    """A metric is undefined for the given result (e.g. zero elapsed time)."""
