"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, TrainingDiverged -> 4.
"""


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or out of range."""


class DataError(ValueError):
    """A dataset, table, or file is malformed or violates a precondition."""


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite or runaway loss."""
