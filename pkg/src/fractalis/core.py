"""Shared domain types and small numeric helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


class FractalisError(ValueError):
    """Raised on invalid data or a numerically degenerate computation."""


@dataclass(frozen=True)
class TimeSeries:
    """A uniformly sampled real-valued signal."""

    samples: np.ndarray
    rate_hz: float = 1.0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise FractalisError("samples must be one-dimensional")
        if x.size < 2:
            raise FractalisError("a time series needs at least 2 samples")
        if not np.all(np.isfinite(x)):
            raise FractalisError("samples must be finite")
        if not (self.rate_hz > 0 and math.isfinite(self.rate_hz)):
            raise FractalisError("rate_hz must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "rate_hz", float(self.rate_hz))

    def __len__(self):
        return self.samples.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.samples, dtype=dtype)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.rate_hz


def as_series(x, rate_hz: float | None = None) -> TimeSeries:
    """Coerce an array-like or TimeSeries into a TimeSeries."""
    if isinstance(x, TimeSeries):
        if rate_hz is not None and rate_hz != x.rate_hz:
            return TimeSeries(x.samples, rate_hz)
        return x
    return TimeSeries(np.asarray(x, dtype=float), 1.0 if rate_hz is None else rate_hz)


@dataclass(frozen=True)
class Trial:
    """One multichannel recording with its subject and emotion ratings.

    ``channels`` maps channel name to samples; insertion order is kept.
    """

    channels: Mapping[str, TimeSeries]
    subject_id: str
    labels: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.channels:
            raise FractalisError("a trial needs at least one channel")
        shapes = {(len(ts), ts.rate_hz) for ts in self.channels.values()}
        if len(shapes) != 1:
            raise FractalisError("all channels must share length and rate_hz")
        for name, rating in self.labels.items():
            if not 1.0 <= rating <= 9.0:
                raise FractalisError(f"rating {name}={rating} outside [1, 9]")
        object.__setattr__(self, "channels", dict(self.channels))
        object.__setattr__(self, "labels", dict(self.labels))

    @property
    def rate_hz(self) -> float:
        return next(iter(self.channels.values())).rate_hz

    @property
    def channel_names(self) -> list[str]:
        return list(self.channels)

    def __getitem__(self, name: str) -> TimeSeries:
        try:
            return self.channels[name]
        except KeyError:
            raise FractalisError(f"channel {name!r} not present in trial") from None


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float


def least_squares_fit(xs: Sequence[float], ys: Sequence[float]) -> LineFit:
    """Ordinary least-squares line ``ys ~ slope * xs + intercept``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FractalisError("xs and ys must be 1-D and of equal length")
    if x.size < 2:
        raise FractalisError("need at least 2 points for a line fit")
    if np.ptp(x) == 0.0:
        raise FractalisError("degenerate abscissa")
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    yc = y - y.mean()
    slope = float(np.dot(xc, yc)) / sxx
    intercept = float(y.mean() - slope * x.mean())
    syy = float(np.dot(yc, yc))
    if syy == 0.0:
        r2 = 1.0
    else:
        resid = yc - slope * xc
        r2 = 1.0 - float(np.dot(resid, resid)) / syy
    return LineFit(slope, intercept, min(1.0, max(0.0, r2)))


def summarize(values: Sequence[float]) -> tuple[float, float, float]:
    """Return ``(mean, median, std)`` with the population standard deviation."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise FractalisError("cannot summarize an empty sequence")
    if not np.all(np.isfinite(v)):
        raise FractalisError("values must be finite")
    mean, _, std = summarize_columns(v[:, None])
    return float(mean[0]), float(np.median(v)), float(std[0])


def summarize_columns(matrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column-wise :func:`summarize` of a 2-D array (rows are observations)."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] == 0:
        raise FractalisError("expected a non-empty 2-D array")
    # deviations from the first row keep identical columns at exactly zero spread
    d = m - m[0]
    return m[0] + d.mean(axis=0), np.median(m, axis=0), d.std(axis=0)


def window_bounds(n: int, window: int, hop: int) -> list[int]:
    """Start indices of full windows of ``window`` samples stepped by ``hop``."""
    if window > n:
        raise FractalisError(f"window of {window} samples longer than signal ({n})")
    if window < 1 or hop < 1:
        raise FractalisError("window and hop must be positive")
    return list(range(0, n - window + 1, hop))


def window_split(x, window_s: float, overlap_frac: float = 0.5) -> list[TimeSeries]:
    """Split ``x`` into overlapping windows of ``window_s`` seconds.

    The trailing remainder that does not fill a whole window is dropped.
    """
    ts = as_series(x)
    if not 0.0 <= overlap_frac < 1.0:
        raise FractalisError("overlap_frac must lie in [0, 1)")
    window = int(round(window_s * ts.rate_hz))
    hop = max(1, int(round(window * (1.0 - overlap_frac))))
    return [TimeSeries(ts.samples[i:i + window], ts.rate_hz)
            for i in window_bounds(len(ts), window, hop)]
