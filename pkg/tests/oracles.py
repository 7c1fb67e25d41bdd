"""Independent reference computations used to check the library."""

import math

import numpy as np
from scipy import integrate


def f_tail_quadrature(f, d1, d2):
    """P(F(d1, d2) > f) by adaptive quadrature of the Beta(d2/2, d1/2) density.

    With x = d2 / (d2 + d1 f) the tail equals P(Beta(d2/2, d1/2) < x). The
    shorter side of [0, 1] is integrated, with algebraic endpoint weights
    absorbing the density's singularities.
    """
    a, b = d2 / 2.0, d1 / 2.0
    log_beta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    x = d2 / (d2 + d1 * f)
    if x <= 0.5:
        val, _ = integrate.quad(
            lambda t: (1 - t) ** (b - 1), 0.0, x, weight="alg", wvar=(a - 1, 0.0),
            epsabs=1e-14, epsrel=1e-12, limit=200,
        )
        return val * math.exp(-log_beta)
    val, _ = integrate.quad(
        lambda t: t ** (a - 1), x, 1.0, weight="alg", wvar=(0.0, b - 1),
        epsabs=1e-14, epsrel=1e-12, limit=200,
    )
    return 1.0 - val * math.exp(-log_beta)


def gauss_solve(a, b):
    """Gaussian elimination with partial pivoting, written out longhand."""
    a = [list(map(float, row)) for row in a]
    b = list(map(float, b))
    n = len(b)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(col + 1, n):
            factor = a[r][col] / a[col][col]
            for c in range(col, n):
                a[r][c] -= factor * a[col][c]
            b[r] -= factor * b[col]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = b[r] - sum(a[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / a[r][r]
    return np.array(x)


def normal_equations(X, y):
    """(A^T A)^-1 A^T y for the intercept-augmented design A."""
    A = np.column_stack([np.ones(len(y)), X])
    return gauss_solve(A.T @ A, A.T @ y)


def order_statistic_exceedance(B=50, draws=200_000, seed=12345):
    """Monte Carlo probability that an exchangeable observed statistic falls
    outside [2nd smallest, 2nd largest] of B replicates."""
    rng = np.random.default_rng(seed)
    u = rng.random((draws, B + 1))
    obs = u[:, 0]
    reps = np.sort(u[:, 1:], axis=1)
    outside = (obs < reps[:, 1]) | (obs > reps[:, B - 2])
    return float(outside.mean())
