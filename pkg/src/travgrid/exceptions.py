"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems (missing or malformed input files) with 3.
"""


class TravgridError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TravgridError):
    """Invalid configuration file, option value, or CLI usage."""


class DataError(TravgridError):
    """Missing, truncated, or malformed input data."""
