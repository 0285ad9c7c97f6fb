"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes (config 2, data 3, contract 4).
"""


class TapeworldError(Exception):
    """Base class for all package errors."""


class ConfigError(TapeworldError):
    """Bad or unknown configuration key/value."""


class DataError(TapeworldError):
    """Malformed, truncated, or otherwise unusable input data."""


class ContractViolation(TapeworldError):
    """A caller broke an operation's precondition or an internal invariant."""
