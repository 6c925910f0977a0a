"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
InvariantError -> 4.
"""


class SyngramError(Exception):
    """Base class for all package errors."""


class ConfigError(SyngramError):
    """Bad configuration or invalid argument combination."""


class DataError(SyngramError):
    """Malformed or infeasible input data."""


class InvariantError(SyngramError):
    """An internal invariant was violated; indicates a bug."""
