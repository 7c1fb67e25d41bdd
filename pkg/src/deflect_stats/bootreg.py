"""Night-grouped bootstrap of ordinary least squares fits.

Each replicate draws one observation per night, which removes the strong
within-night correlation, fits an OLS model with intercept and records the
coefficients, R^2 and the global F-test p-value.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import betainc

from deflect_stats.errors import (
    DegenerateResponseError,
    IllConditionedError,
    NumericalError,
    ValidationError,
)
from deflect_stats.ingest import Dataset
from deflect_stats.pca import PcaModel
from deflect_stats.permtest import group_indices
from deflect_stats.seeding import replicate_rng
from deflect_stats.standardize import StandardizedMatrix, standardize

DEFAULT_REPLICATES = 100
RCOND_THRESHOLD = 1e-10
MAX_REDRAWS = 10
HIST_BINS = 10
QUANTILES = (0.025, 0.5, 0.975)
RESPONSES = ("xi", "eta")
DESIGNS = ("raw", "pca")


@dataclass(frozen=True)
class OlsFit:
    intercept: float
    coefficients: np.ndarray
    r_squared: float
    f_statistic: float
    p_value: float
    residual_variance: float
    n: int
    p: int


def f_pvalue(f: float, d1: int, d2: int) -> float:
    """Upper tail ``P(F(d1, d2) > f)`` via the regularized incomplete beta function."""
    if not math.isfinite(f):
        raise ValidationError(f"F statistic must be finite, got {f}")
    if f < 0:
        raise ValidationError(f"F statistic must be non-negative, got {f}")
    if d1 < 1 or d2 < 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got ({d1}, {d2})")
    if f == 0:
        return 1.0
    x = d2 / (d2 + d1 * f)
    return float(min(1.0, max(0.0, betainc(d2 / 2.0, d1 / 2.0, x))))


def ols_fit(X, y, rcond_threshold: float = RCOND_THRESHOLD) -> OlsFit:
    """Least squares with an intercept column, solved through a QR factorization.

    Raises ``IllConditionedError`` when the reciprocal 2-norm condition number
    of the intercept-augmented design falls below ``rcond_threshold`` and
    ``DegenerateResponseError`` for a constant response.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if y.shape != (n,):
        raise ValidationError(f"response has shape {y.shape}, expected ({n},)")
    if n <= p + 1:
        raise ValidationError(f"need n > p + 1, got n={n}, p={p}")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateResponseError("response is constant (zero total sum of squares)")

    design = np.column_stack([np.ones(n), X])
    q, r = np.linalg.qr(design)
    sv = np.linalg.svd(r, compute_uv=False)
    rcond = sv[-1] / sv[0] if sv[0] > 0 else 0.0
    if rcond < rcond_threshold:
        raise IllConditionedError(float(rcond), rcond_threshold)
    beta = solve_triangular(r, q.T @ y)

    resid = y - design @ beta
    ss_res = float(resid @ resid)
    df_res = n - p - 1
    r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    if r2 >= 1.0:
        f_stat, p_val = math.inf, 0.0
    else:
        f_stat = (r2 / p) / ((1.0 - r2) / df_res)
        p_val = f_pvalue(f_stat, p, df_res)
    beta.setflags(write=False)
    return OlsFit(
        intercept=float(beta[0]),
        coefficients=beta[1:],
        r_squared=r2,
        f_statistic=f_stat,
        p_value=p_val,
        residual_variance=ss_res / df_res,
        n=n,
        p=p,
    )


def skewness(samples) -> float:
    """Adjusted Fisher-Pearson sample skewness ``G1``."""
    x = np.asarray(samples, dtype=float)
    m = x.size
    if m < 3:
        raise ValidationError(f"skewness needs at least 3 samples, got {m}")
    # the float mean of identical values can miss them by an ulp
    if np.all(x == x[0]):
        raise ValidationError("skewness undefined for zero variance")
    d = x - x.mean()
    m2 = float(np.mean(d**2))
    g1 = float(np.mean(d**3)) / m2**1.5
    return g1 * math.sqrt(m * (m - 1)) / (m - 2)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class CoefficientSummary:
    name: str
    quantiles: tuple  # values at QUANTILES
    mean: float
    skewness: Optional[float]
    histogram: Histogram

    @property
    def interval(self):
        return self.quantiles[0], self.quantiles[-1]


@dataclass(frozen=True)
class BootstrapRegressionSummary:
    fits: tuple
    rows: tuple  # observation indices used by each accepted fit
    coefficient_names: tuple  # intercept first
    per_coefficient: tuple
    r2_histogram: Histogram
    pvalue_histogram: Histogram
    seed: int
    response: str
    design: str
    replicates: int
    redraw_count: int
    failed_replicates: tuple
    standardized_response: bool

    def coefficient(self, name: str) -> CoefficientSummary:
        return self.per_coefficient[self.coefficient_names.index(name)]

    def coefficient_samples(self) -> np.ndarray:
        """B x (p + 1) array, intercept in column 0."""
        return np.array([[f.intercept, *f.coefficients] for f in self.fits])


def histogram(samples, value_range=None, bins: int = HIST_BINS) -> Histogram:
    counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins, range=value_range)
    return Histogram(edges, counts)


def _summarize_coefficient(name, samples):
    q = tuple(float(v) for v in np.quantile(samples, QUANTILES))
    try:
        g = skewness(samples)
    except ValidationError:
        g = None
    return CoefficientSummary(name, q, float(np.mean(samples)), g, histogram(samples))


def bootstrap_regression(
    dataset: Dataset,
    response: str = "xi",
    B: int = DEFAULT_REPLICATES,
    seed: int = 0,
    design: str = "raw",
    pca_model: Optional[PcaModel] = None,
    pca_dims: Optional[Sequence[int]] = None,
    standardized: Optional[StandardizedMatrix] = None,
    standardize_response: bool = False,
    workers: int = 1,
    max_redraws: int = MAX_REDRAWS,
    rcond_threshold: float = RCOND_THRESHOLD,
) -> BootstrapRegressionSummary:
    """Bootstrap OLS with one uniformly drawn observation per night.

    Parameters
    ----------
    dataset : Dataset
        Campaign; nights define the resampling groups.
    response : {"xi", "eta"}
    B : int
        Number of replicates.
    seed : int
        Attempt ``a`` of replicate ``b`` draws rows with a generator keyed by
        ``(seed, b, a)``.
    design : {"raw", "pca"}
        ``raw`` uses the 9 standardized active variables; ``pca`` uses the
        columns ``pca_dims`` (1-based, default all) of
        ``pca_model.individual_coords``.
    standardized : StandardizedMatrix, optional
        Precomputed standardization of ``dataset``.
    standardize_response : bool
        z-score the response over the whole dataset before resampling.
    workers : int
        Thread count; output does not depend on it.

    Ill-conditioned or constant-response draws are redrawn up to
    ``max_redraws`` times; a replicate that never succeeds is recorded in
    ``failed_replicates``.
    """
    if response not in RESPONSES:
        raise ValidationError(f"response must be one of {RESPONSES}, got {response!r}")
    if design not in DESIGNS:
        raise ValidationError(f"design must be one of {DESIGNS}, got {design!r}")
    if B < 1:
        raise ValidationError(f"need at least one replicate, got {B}")
    y_all = dataset.supplementary(response)
    if standardize_response:
        y_all = standardize(y_all[:, None], (response,)).values[:, 0]

    if design == "raw":
        if standardized is None:
            standardized = standardize(dataset.matrix())
        x_all = standardized.values
        names = tuple(standardized.column_names)
    else:
        if pca_model is None:
            raise ValidationError("design 'pca' requires a fitted PcaModel")
        coords = pca_model.individual_coords
        if coords.shape[0] != len(dataset):
            raise ValidationError(
                f"PCA model covers {coords.shape[0]} observations, dataset has {len(dataset)}"
            )
        dims = tuple(range(1, coords.shape[1] + 1)) if pca_dims is None else tuple(pca_dims)
        for d in dims:
            if not 1 <= d <= coords.shape[1]:
                raise ValidationError(f"PCA dimension {d} outside 1..{coords.shape[1]}")
        x_all = coords[:, [d - 1 for d in dims]]
        names = tuple(f"D{d}" for d in dims)
    if x_all.shape[0] != len(dataset):
        raise ValidationError("design matrix and dataset disagree on row count")

    nights = list(group_indices(dataset.nights).values())
    p = x_all.shape[1]
    if len(nights) < p + 2:
        raise ValidationError(
            f"{len(nights)} nights cannot support {p} predictors (need at least {p + 2})"
        )
    sizes = np.array([len(idx) for idx in nights])

    def replicate(b):
        redrawn = False
        for attempt in range(max_redraws + 1):
            rng = replicate_rng(seed, b, attempt)
            picks = rng.integers(0, sizes)
            rows = np.array([idx[k] for idx, k in zip(nights, picks)])
            try:
                fit = ols_fit(x_all[rows], y_all[rows], rcond_threshold)
            except (IllConditionedError, DegenerateResponseError):
                redrawn = True
                continue
            return fit, tuple(int(r) for r in rows), redrawn
        return None, None, redrawn

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(replicate, range(B)))
    else:
        outcomes = [replicate(b) for b in range(B)]

    fits, rows, failed = [], [], []
    redraw_count = 0
    for b, (fit, used, redrawn) in enumerate(outcomes):
        redraw_count += redrawn
        if fit is None:
            failed.append(b)
        else:
            fits.append(fit)
            rows.append(used)
    if not fits:
        raise NumericalError(
            f"all {B} bootstrap replicates were ill-conditioned after {max_redraws} redraws"
        )

    return summarize_fits(
        fits,
        rows,
        ("intercept",) + names,
        seed=seed,
        response=response,
        design=design,
        replicates=B,
        redraw_count=redraw_count,
        failed_replicates=failed,
        standardized_response=standardize_response,
    )


def summarize_fits(
    fits,
    rows,
    coefficient_names,
    *,
    seed,
    response,
    design,
    replicates,
    redraw_count=0,
    failed_replicates=(),
    standardized_response=False,
) -> BootstrapRegressionSummary:
    """Quantiles, skewness and histograms over a list of replicate fits."""
    coefficient_names = tuple(coefficient_names)
    samples = np.array([[f.intercept, *f.coefficients] for f in fits])
    per_coef = tuple(
        _summarize_coefficient(nm, samples[:, j]) for j, nm in enumerate(coefficient_names)
    )
    return BootstrapRegressionSummary(
        fits=tuple(fits),
        rows=tuple(tuple(r) for r in rows),
        coefficient_names=coefficient_names,
        per_coefficient=per_coef,
        r2_histogram=histogram([f.r_squared for f in fits], (0.0, 1.0)),
        pvalue_histogram=histogram([f.p_value for f in fits], (0.0, 1.0)),
        seed=int(seed),
        response=response,
        design=design,
        replicates=int(replicates),
        redraw_count=int(redraw_count),
        failed_replicates=tuple(int(b) for b in failed_replicates),
        standardized_response=bool(standardized_response),
    )
