"""Column-wise z-scoring of the active variables and extreme-value flagging."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from deflect_stats.errors import ValidationError, ZeroVarianceError
from deflect_stats.ingest import ACTIVE_COLUMNS


@dataclass(frozen=True)
class StandardizedMatrix:
    values: np.ndarray
    column_means: np.ndarray
    column_sds: np.ndarray
    column_names: tuple

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class ExtremeFlag:
    row_index: int
    column: str
    z_value: float


def standardize(matrix, column_names: Optional[Sequence[str]] = None) -> StandardizedMatrix:
    """Return ``(x - mean) / sd`` per column, ``sd`` with the ``I - 1`` divisor.

    Raises ``ZeroVarianceError`` naming the first column without at least two
    distinct values.
    """
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {x.shape}")
    n_rows, n_cols = x.shape
    if column_names is None:
        column_names = ACTIVE_COLUMNS if n_cols == len(ACTIVE_COLUMNS) else tuple(
            f"V{k + 1}" for k in range(n_cols)
        )
    column_names = tuple(column_names)
    if len(column_names) != n_cols:
        raise ValidationError(f"{len(column_names)} names for {n_cols} columns")
    if n_rows < 2:
        raise ValidationError(f"standardization needs at least 2 rows, got {n_rows}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("matrix contains non-finite values")

    for k in range(n_cols):
        if np.all(x[:, k] == x[0, k]):
            raise ZeroVarianceError(column_names[k])

    means = x.mean(axis=0)
    centred = x - means
    # second centring pass removes the rounding residue of the first
    means = means + centred.mean(axis=0)
    centred = x - means
    sds = np.sqrt((centred**2).sum(axis=0) / (n_rows - 1))
    for k in range(n_cols):
        if not sds[k] > 0.0:
            raise ZeroVarianceError(column_names[k])
    values = centred / sds
    # a mean near a large offset is only representable to its ulp; for a
    # narrow column that residue is visible in z units, so centre once more
    values -= values.mean(axis=0)
    values.setflags(write=False)
    means.setflags(write=False)
    sds.setflags(write=False)
    return StandardizedMatrix(values, means, sds, column_names)


def flag_extremes(std: StandardizedMatrix, threshold: float = 2.0) -> list:
    """All cells with ``|z| > threshold`` (strict), row-major order."""
    if not threshold > 0:
        raise ValidationError(f"threshold must be positive, got {threshold}")
    rows, cols = np.nonzero(np.abs(std.values) > threshold)
    return [
        ExtremeFlag(int(i), std.column_names[k], float(std.values[i, k]))
        for i, k in zip(rows, cols)
    ]
