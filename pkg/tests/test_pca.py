import math

import numpy as np
import pytest

from deflect_stats.errors import ConvergenceError, ValidationError
from deflect_stats.pca import (
    PcaModel,
    SymmetricMatrix,
    correlation_matrix,
    eigendecompose,
    fit_pca,
    strong_correlations,
)
from deflect_stats.standardize import standardize


def pearson(x, y):
    """Textbook Pearson coefficient, used as an independent oracle."""
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def test_identical_columns_correlate_perfectly(rng):
    x = rng.normal(size=50)
    c = correlation_matrix(standardize(np.column_stack([x, x]))).entries
    assert abs(c[0, 1] - 1.0) <= 1e-12


def test_opposite_columns_anticorrelate(rng):
    x = rng.normal(size=50)
    c = correlation_matrix(standardize(np.column_stack([x, -x]))).entries
    assert abs(c[0, 1] + 1.0) <= 1e-12


def test_correlation_matrix_matches_pearson(rng):
    x = rng.normal(size=(510, 9)) @ rng.normal(size=(9, 9))
    c = correlation_matrix(standardize(x)).entries
    for j in range(9):
        for k in range(9):
            assert abs(c[j, k] - pearson(list(x[:, j]), list(x[:, k]))) <= 1e-12
    assert np.array_equal(c, c.T)
    assert np.abs(np.diag(c) - 1).max() <= 1e-12


def test_symmetric_matrix_rejects_asymmetry():
    with pytest.raises(ValidationError):
        SymmetricMatrix(np.array([[1.0, 0.5], [0.4, 1.0]]))


def test_identity_eigensystem():
    values, vectors = eigendecompose(np.eye(9))
    np.testing.assert_array_equal(values, np.ones(9))
    np.testing.assert_array_equal(vectors, np.eye(9))


def test_rank_one_two_by_two():
    values, vectors = eigendecompose(SymmetricMatrix(np.ones((2, 2))))
    np.testing.assert_allclose(values, [2.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(vectors[:, 0], [1 / math.sqrt(2)] * 2, atol=1e-15)


def test_random_symmetric_residuals(rng):
    a = rng.normal(size=(9, 9))
    a = (a + a.T) / 2
    values, vectors = eigendecompose(a)
    for s in range(9):
        assert np.abs(a @ vectors[:, s] - values[s] * vectors[:, s]).max() <= 1e-9
    assert np.all(np.diff(values) <= 0)
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(9), atol=1e-12)


def test_sign_convention(rng):
    a = rng.normal(size=(6, 6))
    _, vectors = eigendecompose(a + a.T)
    for s in range(6):
        k = np.argmax(np.abs(vectors[:, s]))
        assert vectors[k, s] >= 0


def test_one_by_one():
    values, vectors = eigendecompose(np.array([[3.5]]))
    assert values.tolist() == [3.5] and vectors.tolist() == [[1.0]]


def test_convergence_failure_reports_norm(rng):
    a = rng.normal(size=(8, 8))
    with pytest.raises(ConvergenceError, match="off-diagonal norm"):
        eigendecompose(a + a.T, max_sweeps=1)


def test_non_symmetric_rejected():
    with pytest.raises(ValidationError):
        eigendecompose(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_order_limit():
    with pytest.raises(ValidationError):
        eigendecompose(np.eye(65))


def test_isotropic_cloud_splits_evenly(rng):
    # orthonormalizing centred columns keeps them centred and uncorrelated
    x = rng.normal(size=(200, 9))
    q, _ = np.linalg.qr(x - x.mean(axis=0))
    model = fit_pca(standardize(q))
    np.testing.assert_allclose(model.inertia_pct, np.full(9, 100 / 9), atol=1e-6)


def test_rank_one_data_first_dimension_carries_all(rng):
    x = rng.normal(size=40)
    model = fit_pca(standardize(np.column_stack([x, 2 * x + 1])))
    np.testing.assert_allclose(model.inertia_pct, [100.0, 0.0], atol=1e-9)
    # null dimension reports zero correlations
    assert np.all(model.var_dim_corr[:, 1] == 0.0)


@pytest.fixture(scope="module")
def fitted(campaign):
    std = standardize(campaign.matrix())
    supp = {n: campaign.supplementary(n) for n in ("xi", "eta")}
    return std, fit_pca(std, supp)


def test_cumulative_ends_at_hundred(fitted):
    _, model = fitted
    assert abs(model.cumulative_pct[-1] - 100.0) <= 1e-9
    assert np.all(np.diff(model.cumulative_pct) >= 0)
    assert abs(model.inertia_pct.sum() - 100.0) <= 1e-9
    np.testing.assert_allclose(model.inertia_pct, 100 * model.eigenvalues / 9, atol=1e-9)


def test_model_identities(fitted):
    std, model = fitted
    z = std.values
    assert abs(model.eigenvalues.sum() - 9) <= 1e-9
    np.testing.assert_allclose(model.individual_coords @ model.eigenvectors.T, z, atol=1e-9)
    var = model.individual_coords.var(axis=0, ddof=1)
    np.testing.assert_allclose(var, model.eigenvalues, atol=1e-8)
    np.testing.assert_allclose((model.var_dim_corr**2).sum(axis=1), 1.0, atol=1e-8)


def test_var_dim_corr_matches_direct_pearson(fitted, campaign):
    _, model = fitted
    x = campaign.matrix()
    for k in range(9):
        for s in range(9):
            direct = pearson(list(x[:, k]), list(model.individual_coords[:, s]))
            assert abs(model.var_dim_corr[k, s] - direct) <= 1e-8


def test_supplementary_correlations(fitted, campaign):
    _, model = fitted
    assert set(model.supp_corr) == {"xi", "eta"}
    xi = campaign.supplementary("xi")
    for s in range(9):
        assert model.supp_corr["xi"][s] == pytest.approx(
            pearson(list(xi), list(model.individual_coords[:, s])), abs=1e-12
        )


def test_zero_variance_supplementary_skipped(fitted):
    std, _ = fitted
    model = fit_pca(std, {"flat": np.ones(std.shape[0])})
    assert model.supp_corr == {}
    assert "flat" in model.warnings[0]


def test_supplementary_length_mismatch(fitted):
    std, _ = fitted
    with pytest.raises(ValidationError):
        fit_pca(std, {"xi": np.ones(3)})


def test_row_permutation(fitted, rng):
    std, model = fitted
    perm = rng.permutation(std.shape[0])
    permuted = standardize(std.values[perm])
    other = fit_pca(permuted)
    assert np.abs(other.eigenvalues - model.eigenvalues).max() <= 1e-12
    np.testing.assert_allclose(other.individual_coords, model.individual_coords[perm], atol=1e-10)


def _model_with(corr):
    corr = np.asarray(corr, dtype=float)
    k = corr.shape[0]
    names = tuple(f"v{i}" for i in range(k))
    z = np.zeros(k)
    return PcaModel(z, np.eye(k), np.zeros((2, k)), z, z, corr, {}, names)


def test_strong_correlations_order_and_threshold():
    corr = [[0.22, 0.61, 0.51], [0.52, -0.06, -0.35], [0.03, 0.38, 0.83]]
    model = _model_with(corr)
    assert strong_correlations(model) == [
        ("v1", 1, 0.52),
        ("v0", 2, 0.61),
        ("v2", 3, 0.83),
        ("v0", 3, 0.51),
    ]


def test_strong_correlations_empty_cases(fitted):
    assert strong_correlations(_model_with(np.zeros((3, 3)))) == []
    assert strong_correlations(fitted[1], 1.0) == []
    with pytest.raises(ValidationError):
        strong_correlations(fitted[1], 0.0)
