"""Augmented Dickey-Fuller unit-root test (constant, no trend)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FractalisError, as_series, window_bounds

# MacKinnon (2010) response surface, constant-only regression, one unit root:
# cv(T) = b0 + b1/T + b2/T**2 + b3/T**3
_MACKINNON_C = {
    "1%": (-3.43035, -6.5393, -16.786, -79.433),
    "5%": (-2.86154, -2.8903, -4.234, -40.040),
    "10%": (-2.56677, -1.5384, -2.809, 0.0),
}


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lags_used: int
    nobs: int
    critical_values: dict
    reject_unit_root_at_5pct: bool


def mackinnon_critical_values(nobs: int) -> dict:
    t = float(nobs)
    return {k: b0 + b1 / t + b2 / t ** 2 + b3 / t ** 3
            for k, (b0, b1, b2, b3) in _MACKINNON_C.items()}


def schwert_max_lag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _design(x: np.ndarray, p: int, nobs: int):
    """Regressors ``[1, x_{t-1}, dx_{t-1}, ..., dx_{t-p}]`` for the last ``nobs`` differences."""
    dx = np.diff(x)
    end = dx.size
    start = end - nobs
    cols = [np.ones(nobs), x[start:end]]
    for i in range(1, p + 1):
        cols.append(dx[start - i:end - i])
    return np.column_stack(cols), dx[start:end]


def _ols(X, y):
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise FractalisError("singular ADF regression")
    resid = y - X @ beta
    return beta, float(resid @ resid)


def _tstat_level(X, y) -> float:
    beta, ssr = _ols(X, y)
    n, k = X.shape
    sigma2 = ssr / (n - k)
    if sigma2 <= 0.0:
        raise FractalisError("singular ADF regression: zero residual variance")
    xtx_inv = np.linalg.inv(X.T @ X)
    return float(beta[1] / math.sqrt(sigma2 * xtx_inv[1, 1]))


def adf_test(x, max_lags: int | str | None = "auto") -> AdfResult:
    """ADF test of a unit root against level stationarity.

    ``max_lags="auto"`` searches ``p = 0..floor(12 (N/100)**0.25)`` and keeps
    the lag with the lowest AIC (all candidates fitted on a common sample);
    an integer fixes ``p``.
    """
    v = np.asarray(as_series(x).samples)
    n = v.size
    if n < 50:
        raise FractalisError("ADF test needs at least 50 samples")
    if np.ptp(v) == 0.0:
        raise FractalisError("singular ADF regression: constant series")
    cap = n // 2 - 2
    if max_lags in ("auto", None):
        pmax = min(schwert_max_lag(n), cap)
        nobs = n - 1 - pmax
        best = None
        for p in range(pmax + 1):
            X, y = _design(v, p, nobs)
            _, ssr = _ols(X, y)
            aic = nobs * math.log(ssr / nobs) + 2 * X.shape[1]
            if best is None or aic < best[0]:
                best = (aic, p)
        p = best[1]
    else:
        p = int(max_lags)
        if not 0 <= p <= cap:
            raise FractalisError(f"lag order must lie in [0, {cap}]")
    nobs = n - 1 - p
    X, y = _design(v, p, nobs)
    stat = _tstat_level(X, y)
    cvs = mackinnon_critical_values(nobs)
    return AdfResult(stat, p, nobs, cvs, stat < cvs["5%"])


def rolling_adf(x, window: int, hop: int, max_lags: int | str | None = "auto") -> list[AdfResult]:
    """:func:`adf_test` on each full window of ``window`` samples stepped by ``hop``."""
    v = np.asarray(as_series(x).samples)
    if window < 50:
        raise FractalisError("ADF window must be at least 50 samples")
    return [adf_test(v[i:i + window], max_lags) for i in window_bounds(v.size, window, hop)]
