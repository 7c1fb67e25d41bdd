"""Correlation-matrix PCA with supplementary quantitative variables.

The eigen-solver is a cyclic Jacobi method. Rotations are scheduled in
round-robin order so that each round touches disjoint index pairs; a whole
round is then one orthogonal similarity transform, which keeps the inner loop
in numpy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from deflect_stats.errors import ConvergenceError, ValidationError
from deflect_stats.standardize import StandardizedMatrix

log = logging.getLogger(__name__)

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
MAX_ORDER = 64
NULL_EIGENVALUE = 1e-12


@dataclass(frozen=True)
class SymmetricMatrix:
    entries: np.ndarray
    names: Optional[tuple] = None

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValidationError("matrix is not exactly symmetric")
        object.__setattr__(self, "entries", a)

    @property
    def order(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class PcaModel:
    """A fitted PCA. Dimension ``s`` (0-based here) is reported as ``D{s+1}``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    individual_coords: np.ndarray
    inertia_pct: np.ndarray
    cumulative_pct: np.ndarray
    var_dim_corr: np.ndarray
    supp_corr: dict
    variable_names: tuple
    warnings: tuple = field(default=())

    @property
    def n_dims(self) -> int:
        return len(self.eigenvalues)


def correlation_matrix(std: StandardizedMatrix) -> SymmetricMatrix:
    """``Z^T Z / (I - 1)`` with the lower triangle mirrored from the upper."""
    z = std.values
    n_rows = z.shape[0]
    if n_rows < 2:
        raise ValidationError("correlation matrix needs at least 2 rows")
    c = (z.T @ z) / (n_rows - 1)
    upper = np.triu(c)
    c = upper + np.triu(c, 1).T
    return SymmetricMatrix(c, std.column_names)


def _round_robin(n):
    """Rounds of disjoint (p, q) pairs covering every pair once (circle method)."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                pairs.append((min(a, b), max(a, b)))
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_norm(a):
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def _apply_sign_convention(vecs):
    # largest |component| non-negative; argmax returns the lowest index on ties
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.where(vecs[idx, np.arange(vecs.shape[1])] < 0, -1.0, 1.0)
    return vecs * signs


def eigendecompose(m, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigenvalues (descending) and orthonormal eigenvectors (columns).

    Iterates until the off-diagonal Frobenius norm is at most ``tol`` times the
    Frobenius norm of the input. Raises ``ConvergenceError`` with the final
    off-diagonal norm when ``max_sweeps`` is exhausted.
    """
    entries = m.entries if isinstance(m, SymmetricMatrix) else np.asarray(m, dtype=float)
    a = np.array(entries, dtype=float)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if n > MAX_ORDER:
        raise ValidationError(f"order {n} exceeds the dense limit {MAX_ORDER}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix contains non-finite values")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValidationError("matrix is not symmetric")
    a = (a + a.T) / 2.0
    v = np.eye(n)
    target = tol * float(np.linalg.norm(a))

    rounds = _round_robin(n) if n > 1 else []
    sweeps = 0
    off = _off_norm(a)
    while off > target:
        if sweeps >= max_sweeps:
            raise ConvergenceError(off, sweeps)
        for p, q in rounds:
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]
            nonzero = apq != 0.0
            safe_apq = np.where(nonzero, apq, 1.0)
            with np.errstate(over="ignore"):
                theta = (aqq - app) / (2.0 * safe_apq)
                # |theta| -> inf gives t -> 0, the identity rotation
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(nonzero, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rot = np.eye(n)
            rot[p, p] = c
            rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            a = (a + a.T) / 2.0
            a[p, q] = 0.0
            a[q, p] = 0.0
            v = v @ rot
        sweeps += 1
        off = _off_norm(a)

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vecs = _apply_sign_convention(v[:, order])
    return values, vecs


def fit_pca(std: StandardizedMatrix, supplementary: Optional[Mapping[str, np.ndarray]] = None) -> PcaModel:
    """Fit PCA on a standardized matrix.

    Parameters
    ----------
    std : StandardizedMatrix
        Active variables, already z-scored.
    supplementary : mapping of name -> length-I series, optional
        Quantitative variables correlated with the axes after the fit
        without influencing them. Zero-variance series are skipped and
        recorded in ``PcaModel.warnings``.

    Returns
    -------
    PcaModel
    """
    z = std.values
    n_rows, n_vars = z.shape
    corr = correlation_matrix(std)
    eigenvalues, eigenvectors = eigendecompose(corr)
    eigenvalues = np.where(eigenvalues < 0.0, 0.0, eigenvalues)

    coords = z @ eigenvectors
    inertia_pct = 100.0 * eigenvalues / n_vars
    cumulative_pct = np.cumsum(inertia_pct)

    live = eigenvalues > NULL_EIGENVALUE
    var_dim_corr = np.where(live, eigenvectors * np.sqrt(np.where(live, eigenvalues, 0.0)), 0.0)
    np.clip(var_dim_corr, -1.0, 1.0, out=var_dim_corr)

    supp_corr = {}
    warnings = []
    for name, series in (supplementary or {}).items():
        y = np.asarray(series, dtype=float)
        if y.shape != (n_rows,):
            raise ValidationError(
                f"supplementary variable {name!r} has length {y.size}, expected {n_rows}"
            )
        yc = y - y.mean()
        ss = float(yc @ yc)
        if not ss > 0.0:
            msg = f"supplementary variable {name!r} has zero variance; skipped"
            log.warning(msg)
            warnings.append(msg)
            continue
        r = np.zeros(n_vars)
        fc = coords - coords.mean(axis=0)
        for s in range(n_vars):
            if live[s]:
                r[s] = (yc @ fc[:, s]) / np.sqrt(ss * (fc[:, s] @ fc[:, s]))
        supp_corr[name] = np.clip(r, -1.0, 1.0)

    for arr in (eigenvalues, eigenvectors, coords, inertia_pct, cumulative_pct, var_dim_corr):
        arr.setflags(write=False)
    return PcaModel(
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        individual_coords=coords,
        inertia_pct=inertia_pct,
        cumulative_pct=cumulative_pct,
        var_dim_corr=var_dim_corr,
        supp_corr=supp_corr,
        variable_names=tuple(std.column_names),
        warnings=tuple(warnings),
    )


def strong_correlations(model: PcaModel, threshold: float = 0.5) -> list:
    """``(variable, dimension, corr)`` with ``|corr| > threshold``.

    Dimensions are 1-based. Sorted by dimension, then by decreasing ``|corr|``.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValidationError(f"threshold must lie in (0, 1], got {threshold}")
    out = []
    for s in range(model.n_dims):
        col = model.var_dim_corr[:, s]
        hits = [k for k in range(len(col)) if abs(col[k]) > threshold]
        hits.sort(key=lambda k: -abs(col[k]))
        out.extend((model.variable_names[k], s + 1, float(col[k])) for k in hits)
    return out
