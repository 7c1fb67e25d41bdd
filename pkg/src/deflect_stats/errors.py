"""Exception hierarchy.

``DataError`` covers bad input and violated preconditions (CLI exit code 2),
``NumericalError`` covers solver failures (exit code 3).
"""


class DeflectStatsError(Exception):
    """Base class for all package errors."""


class DataError(DeflectStatsError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(DataError):
    pass


class MissingColumnError(DataError):
    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"missing column {column!r}")


class ZeroVarianceError(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} has zero variance")


class DegenerateResponseError(DataError):
    pass


class NumericalError(DeflectStatsError, ArithmeticError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, off_norm, sweeps):
        self.off_norm = off_norm
        self.sweeps = sweeps
        super().__init__(
            f"Jacobi iteration did not converge in {sweeps} sweeps "
            f"(off-diagonal norm {off_norm:.3e})"
        )


class IllConditionedError(NumericalError):
    def __init__(self, rcond, threshold):
        self.rcond = rcond
        self.threshold = threshold
        super().__init__(
            f"design matrix is ill-conditioned (rcond {rcond:.3e} < {threshold:.1e})"
        )


class StageError(DeflectStatsError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage} stage: {cause}")
