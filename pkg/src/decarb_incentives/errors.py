"""Exception types raised across the package.

Every error carries enough context (row, column, field, stage) for the CLI to
print a one-line diagnostic.
"""


class DecarbError(Exception):
    """Base class for all package errors."""


class ConfigError(DecarbError):
    """Invalid run configuration; the CLI maps this to exit status 2."""


# population ---------------------------------------------------------------

class DataError(DecarbError, ValueError):
    """A household record failed validation."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class MissingColumn(DataError):
    pass


class NonNumericField(DataError):
    pass


class NegativeUsage(DataError):
    pass


class InvalidSpec(DecarbError, ValueError):
    pass


class PopulationTooSmall(DecarbError, ValueError):
    pass


class EmptyPopulation(DecarbError, ValueError):
    pass


# retrofit / carbon --------------------------------------------------------

class EmptyTempProfile(DecarbError, ValueError):
    pass


class YearOutOfSchedule(DecarbError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "year outside SCC schedule"


# allocate / bandit --------------------------------------------------------

class UnknownGroup(DecarbError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown group"


class EmptyThresholds(DecarbError, ValueError):
    pass


class SurveyLargerThanPopulation(DecarbError, ValueError):
    pass


class NoConvergence(DecarbError, RuntimeError):
    pass


class StageError(DecarbError, RuntimeError):
    """Wraps a failure inside one pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
