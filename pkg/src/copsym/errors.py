"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, NetworkError -> 3,
ConfigError -> 64.
"""


class DataError(ValueError):
    """Malformed or unusable input data."""


class ConfigError(ValueError):
    """Invalid configuration or usage."""


class NetworkError(RuntimeError):
    """Download failed; no partial output was kept."""
