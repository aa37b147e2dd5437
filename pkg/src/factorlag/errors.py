"""Exception hierarchy.

Grouped so the CLI can map failures to exit codes: config errors (2),
data errors (3), numerical failures (4).
"""


class FactorlagError(Exception):
    """Base class for all library errors."""


class ConfigError(FactorlagError):
    """Invalid configuration, flags, or arguments."""


class DataError(FactorlagError):
    """Malformed or inadmissible input data."""


class ParseError(DataError):
    """Malformed CSV or config file; carries a location when known."""

    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc += f" (row {row}"
            loc += f", column {column})" if column is not None else ")"
        super().__init__(message + loc)
        self.row = row
        self.column = column


class DomainError(DataError):
    """Value outside the mathematical domain of a transform."""


class NumericalError(FactorlagError):
    """Numerical failure during estimation."""


class RankDeficiencyError(NumericalError):
    """A matrix required to be full rank is numerically rank deficient."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class ConvergenceError(NumericalError):
    """An iterative solver failed to converge."""
