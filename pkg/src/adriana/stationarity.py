"""Stationarity diagnostics and the reversible transforms applied before modelling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import (
    ConstantSeries,
    DegenerateRange,
    EmptyPartition,
    MissingSeeds,
    SeriesTooShort,
    SingularRegression,
    TooFewSamples,
    ValidationError,
)

# MacKinnon (1994) response-surface coefficients, constant-only regression, one I(1) series.
_TAU_MAX = 2.74
_TAU_MIN = -18.83
_TAU_STAR = -1.61
_TAU_SMALLP = (2.1659, 1.4412, 3.8269e-2)
_TAU_LARGEP = (1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2)
# MacKinnon (2010) finite-sample critical values: b0 + b1/n + b2/n^2 + b3/n^3
_CRIT_2010 = {
    "1%": (-3.43035, -6.5393, -16.786, -79.433),
    "5%": (-2.86154, -2.8903, -4.234, -40.040),
    "10%": (-2.56677, -1.5384, -2.809, 0.0),
}


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    lags_used: int
    nobs: int
    critical_values: dict

    @property
    def reject_unit_root_at_5pct(self) -> bool:
        return self.p_value < 0.05

    def summary(self) -> str:
        verdict = ("reject unit root (stationary)" if self.reject_unit_root_at_5pct
                   else "cannot reject unit root (non-stationary)")
        lines = [
            f"statistic: {self.statistic:.6f}",
            f"p-value: {self.p_value:.6f}",
            f"lags: {self.lags_used}",
            f"nobs: {self.nobs}",
        ]
        lines += [f"critical {k}: {v:.4f}" for k, v in self.critical_values.items()]
        lines.append(f"verdict: {verdict}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ScalerParams:
    min: float
    max: float

    def __post_init__(self):
        if not self.max >= self.min:
            raise ValidationError("scaler max must be >= min")


@dataclass(frozen=True)
class WindowedDataset:
    """Sliding windows over a series.

    ``target_index[i]`` is the position in the source series of ``targets[i]``.
    """

    window_size: int
    inputs: np.ndarray
    targets: np.ndarray
    target_index: np.ndarray

    def __len__(self):
        return len(self.targets)

    def subset(self, idx) -> "WindowedDataset":
        idx = np.asarray(idx, dtype=int)
        return WindowedDataset(self.window_size, self.inputs[idx], self.targets[idx],
                               self.target_index[idx])


def _as_1d(series) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValidationError("expected a one-dimensional series")
    return x


def difference(series, d: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Apply the first difference ``d`` times.

    Returns the differenced series and the ``d`` leading values dropped at each
    level, which :func:`undifference` needs to rebuild the input.
    """
    x = _as_1d(series)
    if d < 1:
        raise ValidationError("difference order must be >= 1")
    if len(x) <= d:
        raise SeriesTooShort(f"need more than {d} values, got {len(x)}")
    seeds = []
    for _ in range(d):
        seeds.append(x[0])
        x = np.diff(x)
    return x, np.array(seeds)


def undifference(diffs, seeds) -> np.ndarray:
    x = _as_1d(diffs)
    seeds = np.atleast_1d(np.asarray(seeds, dtype=float))
    if len(seeds) < 1:
        raise MissingSeeds("at least one seed value is required")
    for s in seeds[::-1]:
        x = np.concatenate([[s], s + np.cumsum(x)])
    return x


def difference_anchors(series, d: int = 1) -> np.ndarray:
    """Last value of each differencing level (levels 0..d-1).

    These anchor forward reintegration of forecasts made on the differenced scale.
    """
    x = _as_1d(series)
    if len(x) <= d:
        raise SeriesTooShort(f"need more than {d} values, got {len(x)}")
    anchors = []
    for _ in range(d):
        anchors.append(x[-1])
        x = np.diff(x)
    return np.array(anchors)


def reintegrate(future_diffs, anchors) -> np.ndarray:
    """Turn forecasts of the d-th difference into forecasts of the original series."""
    x = _as_1d(future_diffs)
    anchors = np.atleast_1d(np.asarray(anchors, dtype=float))
    if len(anchors) < 1:
        raise MissingSeeds("at least one anchor is required")
    for a in anchors[::-1]:
        x = a + np.cumsum(x)
    return x


def _autocov(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = len(x)
    xc = x - x.mean()
    return np.array([np.dot(xc[: n - k], xc[k:]) / n for k in range(max_lag + 1)])


def acf(series, max_lag: int) -> tuple[np.ndarray, float]:
    """Sample autocorrelation (biased 1/n estimator) and the 95% white-noise half-width."""
    x = _as_1d(series)
    n = len(x)
    if not 0 <= max_lag < n:
        raise ValidationError(f"max_lag must be in [0, {n})")
    c = _autocov(x, max_lag)
    if c[0] <= 0 or not np.isfinite(c[0]):
        raise ConstantSeries("series has zero variance")
    return c / c[0], 1.96 / math.sqrt(n)


def bartlett_band(acf_values, n: int) -> np.ndarray:
    """Lag-dependent 95% band under the MA(k-1) null, as drawn in most ACF plots."""
    r = np.asarray(acf_values, dtype=float)
    var = np.zeros_like(r)
    var[1:] = (1 + 2 * np.concatenate([[0.0], np.cumsum(r[1:-1] ** 2)])) / n
    return 1.96 * np.sqrt(var)


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations via the Durbin-Levinson recursion."""
    r, _ = acf(series, max_lag)
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if max_lag == 0:
        return out
    phi = np.zeros(max_lag + 1)
    phi[1] = r[1]
    out[1] = r[1]
    v = 1.0 - r[1] ** 2
    for k in range(2, max_lag + 1):
        if v <= 0:
            # perfectly predictable: remaining partials are undefined, report 0
            break
        a = (r[k] - np.dot(phi[1:k], r[k - 1:0:-1])) / v
        new = phi.copy()
        new[k] = a
        new[1:k] = phi[1:k] - a * phi[k - 1:0:-1]
        phi = new
        out[k] = a
        v *= 1.0 - a * a
    return out


def _ols(y: np.ndarray, X: np.ndarray):
    xtx = X.T @ X
    try:
        cond = np.linalg.cond(xtx)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularRegression("design matrix is singular")
    beta = np.linalg.solve(xtx, X.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    return beta, rss, np.linalg.inv(xtx)


def _adf_design(x: np.ndarray, lag: int, nobs: int):
    """Rows for dy_t = a + g*y_{t-1} + sum_j c_j dy_{t-j}, using the last ``nobs`` rows."""
    dx = np.diff(x)
    cols = [x[-nobs - 1:-1]]
    for j in range(1, lag + 1):
        cols.append(dx[-nobs - j:len(dx) - j])
    cols.append(np.ones(nobs))
    return dx[-nobs:], np.column_stack(cols)


def mackinnon_p(stat: float) -> float:
    if stat > _TAU_MAX:
        return 1.0
    if stat < _TAU_MIN:
        return 0.0
    coef = _TAU_SMALLP if stat <= _TAU_STAR else _TAU_LARGEP
    return float(norm.cdf(sum(c * stat**i for i, c in enumerate(coef))))


def mackinnon_crit(nobs: int) -> dict:
    return {k: b[0] + b[1] / nobs + b[2] / nobs**2 + b[3] / nobs**3
            for k, b in _CRIT_2010.items()}


def default_max_lag(n: int) -> int:
    return min(int(math.floor(12.0 * (n / 100.0) ** 0.25)), n // 2 - 2)


def adf_test(series, max_lag: int | None = None) -> AdfResult:
    """Augmented Dickey-Fuller test with constant and AIC lag selection.

    All candidate lag orders are compared on the same estimation sample; the
    winner is then refit on every usable observation.
    """
    x = _as_1d(series)
    n = len(x)
    if n < 20:
        raise SeriesTooShort("ADF needs at least 20 observations")
    if np.ptp(x) == 0:
        raise ConstantSeries("series is constant")
    if max_lag is None:
        max_lag = default_max_lag(n)
    if not 0 <= max_lag <= n // 2 - 2:
        raise ValidationError(f"max_lag must be in [0, {n // 2 - 2}]")

    common = n - 1 - max_lag
    best_lag, best_aic = 0, np.inf
    for lag in range(max_lag + 1):
        y, X = _adf_design(x, lag, common)
        _, rss, _ = _ols(y, X)
        llf = -0.5 * common * (math.log(2 * math.pi) + math.log(rss / common) + 1)
        aic = -2 * llf + 2 * X.shape[1]
        if aic < best_aic:
            best_lag, best_aic = lag, aic

    nobs = n - 1 - best_lag
    y, X = _adf_design(x, best_lag, nobs)
    beta, rss, xtx_inv = _ols(y, X)
    sigma2 = rss / (nobs - X.shape[1])
    se = math.sqrt(sigma2 * xtx_inv[0, 0])
    stat = float(beta[0] / se)
    return AdfResult(stat, mackinnon_p(stat), best_lag, nobs, mackinnon_crit(nobs))


def minmax_fit(series) -> ScalerParams:
    x = _as_1d(series)
    if len(x) == 0:
        raise ValidationError("cannot fit a scaler on an empty series")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        raise DegenerateRange(f"all values equal {lo}")
    return ScalerParams(lo, hi)


def minmax_apply(series, params: ScalerParams) -> np.ndarray:
    if params.max == params.min:
        raise DegenerateRange("zero-width scaler")
    return (np.asarray(series, dtype=float) - params.min) / (params.max - params.min)


def minmax_invert(series, params: ScalerParams) -> np.ndarray:
    return np.asarray(series, dtype=float) * (params.max - params.min) + params.min


def make_windows(series, w: int) -> WindowedDataset:
    x = _as_1d(series)
    if w < 1:
        raise ValidationError("window size must be positive")
    if len(x) <= w:
        raise SeriesTooShort(f"series of length {len(x)} cannot fill a window of {w} plus a target")
    n = len(x) - w
    inputs = np.lib.stride_tricks.sliding_window_view(x, w)[:n].copy()
    return WindowedDataset(w, inputs, x[w:].copy(), np.arange(w, len(x)))


def split_point(n: int, train_fraction: float) -> int:
    if not 0 < train_fraction < 1:
        raise ValidationError("train_fraction must lie in (0, 1)")
    cut = int(math.floor(train_fraction * n))
    if cut == 0 or cut == n:
        raise EmptyPartition(f"fraction {train_fraction} of {n} samples leaves a partition empty")
    return cut


def chrono_split(dataset: WindowedDataset, train_fraction: float):
    cut = split_point(len(dataset), train_fraction)
    idx = np.arange(len(dataset))
    return dataset.subset(idx[:cut]), dataset.subset(idx[cut:])


def forward_chain_folds(n, k: int = 10) -> list[tuple[np.ndarray, np.ndarray]]:
    """Expanding-window folds: fold j trains on blocks 0..j-1 and validates on block j."""
    if isinstance(n, WindowedDataset):
        n = len(n)
    if k < 1:
        raise ValidationError("k must be positive")
    if n < 2 * k:
        raise TooFewSamples(f"{n} samples cannot support {k} folds")
    bounds = [j * n // (k + 1) for j in range(k + 2)]
    bounds[-1] = n
    return [(np.arange(0, bounds[j]), np.arange(bounds[j], bounds[j + 1]))
            for j in range(1, k + 1)]
