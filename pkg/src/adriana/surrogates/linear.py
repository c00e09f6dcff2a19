"""Least-squares family (OLS on lag 1, AR(p), ARIMA(1,1,0)) and linear epsilon-SVR."""

from __future__ import annotations

import math

import numpy as np

from ..errors import NonFiniteLoss, SeriesTooShort, SingularDesign, ValidationError
from ..stationarity import difference


def ols_lag1(x, y) -> tuple[float, float]:
    """Closed-form simple regression; returns (intercept, slope)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or len(x) != len(y):
        raise SingularDesign("need at least two paired samples")
    if np.ptp(x) == 0:
        raise SingularDesign("regressor is constant")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    return ym - slope * xm, slope


def lagged_design(series, p: int):
    x = np.asarray(series, dtype=float)
    n = len(x)
    X = np.column_stack([x[p - j - 1:n - j - 1] for j in range(p)])  # column j = lag j+1
    return X, x[p:]


def ols(X, y):
    """Least squares with intercept; returns (intercept, coefficients, rss)."""
    X = np.asarray(X, dtype=float)
    A = np.column_stack([np.ones(len(X)), X])
    if len(A) < A.shape[1]:
        raise SingularDesign("fewer samples than parameters")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= sv[0] * 1e-12:
        raise SingularDesign("design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ beta
    return float(beta[0]), beta[1:], float(resid @ resid)


def fit_ar(series, p: int):
    """AR(p) by OLS on p lagged regressors plus intercept.

    Returns (intercept, coefficients ordered lag 1..p, rss, n_obs).
    """
    x = np.asarray(series, dtype=float)
    if p < 1:
        raise ValidationError("lag order must be >= 1")
    if len(x) <= 2 * p:
        raise SeriesTooShort(f"AR({p}) needs more than {2 * p} observations")
    X, y = lagged_design(x, p)
    c, phi, rss = ols(X, y)
    return c, phi, rss, len(y)


def gaussian_aic(rss: float, n: int, k: int) -> float:
    return n * math.log(rss / n) + 2 * k


def select_ar_order(series, max_p: int) -> int:
    """Lag order minimizing AIC, every candidate fitted on the same sample."""
    x = np.asarray(series, dtype=float)
    max_p = min(max_p, (len(x) - 1) // 2)
    if max_p < 1:
        raise SeriesTooShort("series too short to choose a lag order")
    best, best_aic = 1, math.inf
    for p in range(1, max_p + 1):
        X, y = lagged_design(x[max_p - p:], p)
        _, _, rss = ols(X, y)
        aic = gaussian_aic(max(rss, 1e-300), len(y), p + 1)
        if aic < best_aic:
            best, best_aic = p, aic
    return best


def fit_arima_110(series):
    """ARIMA(1,1,0): AR(1) with intercept on the first difference.

    Returns (intercept, phi, rss, n_obs, aic) with AIC = n ln(RSS/n) + 2k, k = 2.
    """
    x = np.asarray(series, dtype=float)
    if len(x) < 10:
        raise SeriesTooShort("ARIMA(1,1,0) needs at least 10 observations")
    dx, _ = difference(x, 1)
    c, phi, rss, n = fit_ar(dx, 1)
    return c, float(phi[0]), rss, n, gaussian_aic(max(rss, 1e-300), n, 2)


def svr_objective(w, b, X, y, epsilon, l2):
    r = np.abs(y - X @ w - b) - epsilon
    return float(np.mean(np.maximum(r, 0.0)) + 0.5 * l2 * (w @ w))


def fit_svr_linear(X, y, epsilon: float, l2: float = 1e-4, iterations: int = 4000,
                   step: float = 0.5):
    """Linear epsilon-insensitive regression by subgradient descent.

    Deterministic: full-batch subgradients, step ``step / sqrt(k)``, fixed
    iteration count, and the best iterate seen is returned (so the final
    objective never exceeds the starting one). Returns (w, b, objective trace).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise ValidationError("empty training set")
    if epsilon < 0:
        raise ValidationError("epsilon must be non-negative")
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    best = (w.copy(), b, svr_objective(w, b, X, y, epsilon, l2))
    trace = [best[2]]
    for k in range(1, iterations + 1):
        r = y - X @ w - b
        active = np.abs(r) > epsilon
        s = -np.sign(r) * active / n  # d(loss)/d(prediction)
        gw = X.T @ s + l2 * w
        gb = float(s.sum())
        eta = step / math.sqrt(k)
        w = w - eta * gw
        b = b - eta * gb
        obj = svr_objective(w, b, X, y, epsilon, l2)
        if not math.isfinite(obj):
            raise NonFiniteLoss(f"SVR objective diverged at iteration {k}")
        if obj < best[2]:
            best = (w.copy(), b, obj)
        trace.append(best[2])
    return best[0], best[1], trace
