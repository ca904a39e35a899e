"""Exception types raised across the toolkit."""


class SensorAttackError(Exception):
    """Base class for every error raised by the toolkit."""


class DataQualityError(SensorAttackError, ValueError):
    """Non-finite or malformed numerical data."""


class WindowError(SensorAttackError, ValueError):
    """A Hankel depth, window start or width falls outside the data."""


class ExcitationError(SensorAttackError, ValueError):
    """The input is not persistently exciting enough for the requested test."""


class ConfigError(SensorAttackError, ValueError):
    """Inconsistent detector, attack or run configuration."""


class IdentificationError(SensorAttackError, RuntimeError):
    """No sensor set is consistent with the data under the chosen thresholds."""
