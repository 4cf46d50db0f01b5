"""Detrended fluctuation analysis and its multifractal generalisation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .core import FractalisError, LineFit, TimeSeries, as_series, least_squares_fit

EPS_FLOOR = 1e-12


class FloorWarning(UserWarning):
    """A segment fluctuation was floored before taking negative moments."""


@dataclass(frozen=True)
class ScaleGrid:
    scales: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(v) for v in self.scales)
        if len(s) < 4:
            raise FractalisError("a scale grid needs at least 4 scales")
        if any(b <= a for a, b in zip(s, s[1:])):
            raise FractalisError("scales must be strictly increasing")
        if s[0] < 4:
            raise FractalisError("scales must be >= 4 samples")
        object.__setattr__(self, "scales", s)

    def __iter__(self):
        return iter(self.scales)

    def __len__(self):
        return len(self.scales)

    def check_length(self, n: int):
        if self.scales[-1] > n // 4:
            raise FractalisError(
                f"largest scale {self.scales[-1]} exceeds a quarter of the signal length ({n})")

    @classmethod
    def log_spaced(cls, lo: int, hi: int, n: int = 10) -> "ScaleGrid":
        """``n`` log-spaced integer scales in ``[lo, hi]``; rounding duplicates collapse."""
        raw = np.rint(np.geomspace(lo, hi, n)).astype(int)
        return cls(tuple(sorted(set(raw.tolist()))))


@dataclass(frozen=True)
class QGrid:
    qs: tuple[float, ...]

    def __post_init__(self):
        q = tuple(float(v) for v in self.qs)
        if len(q) < 1:
            raise FractalisError("empty q grid")
        if any(b <= a for a, b in zip(q, q[1:])):
            raise FractalisError("q values must be strictly increasing")
        object.__setattr__(self, "qs", q)

    def __iter__(self):
        return iter(self.qs)

    def __len__(self):
        return len(self.qs)

    @property
    def has_zero(self) -> bool:
        return 0.0 in self.qs

    @classmethod
    def linear(cls, lo: float = -5.0, hi: float = 5.0, n: int = 16) -> "QGrid":
        return cls(tuple(np.linspace(lo, hi, n).tolist()))


DEFAULT_QS = QGrid.linear(-5.0, 5.0, 16)


def default_scale_grid(n: int | None = None) -> ScaleGrid:
    """Ten log-spaced scales from 30 to 500, shrunk to fit short signals."""
    if n is None or n // 4 >= 500:
        return ScaleGrid.log_spaced(30, 500, 10)
    hi = n // 4
    lo = max(4, min(30, hi // 4))
    if hi - lo < 3:
        raise FractalisError(f"signal of {n} samples too short for a scale grid")
    return ScaleGrid.log_spaced(lo, hi, 10)


@dataclass(frozen=True)
class FluctuationField:
    """``F[i, j]`` is the q-th order fluctuation for ``qs[i]`` at ``scales[j]``."""

    scales: ScaleGrid
    qs: QGrid
    F: np.ndarray
    H: np.ndarray
    fit_quality: np.ndarray
    floored: bool = False

    def column(self, q: float) -> np.ndarray:
        return self.F[self.qs.qs.index(float(q))]


@dataclass(frozen=True)
class MultifractalSpectrum:
    qs: np.ndarray
    t: np.ndarray
    h: np.ndarray | None = None
    D: np.ndarray | None = None

    @property
    def width(self) -> float:
        if self.h is None:
            raise FractalisError("spectrum has no singularity exponents")
        return float(self.h.max() - self.h.min())


@dataclass(frozen=True)
class Characterization:
    kind: str  # "fGn" or "fBm"
    hurst: float
    dfa_exponent: float


def profile(x) -> np.ndarray:
    """Cumulative sum of the mean-removed signal."""
    v = np.asarray(as_series(x).samples)
    return np.cumsum(v - v.mean())


def _segments(y: np.ndarray, s: int, both_ends: bool) -> np.ndarray:
    ns = y.size // s
    segs = y[:ns * s].reshape(ns, s)
    if both_ends and ns * s != y.size:
        segs = np.vstack([segs, y[y.size - ns * s:].reshape(ns, s)])
    return segs


def detrended_residuals(y, s: int, both_ends: bool = False) -> np.ndarray:
    """Residuals of each length-``s`` segment after removing its least-squares line."""
    segs = _segments(np.asarray(y, dtype=float), s, both_ends)
    n = np.arange(s, dtype=float)
    nc = n - n.mean()
    slope = segs @ nc / np.dot(nc, nc)
    return segs - segs.mean(axis=1, keepdims=True) - slope[:, None] * nc


def _segment_variance(y: np.ndarray, s: int, both_ends: bool) -> np.ndarray:
    if s < 4:
        raise FractalisError("segment scale must be >= 4")
    if s > y.size // 2:
        raise FractalisError(f"scale {s} exceeds half the profile length ({y.size})")
    r = detrended_residuals(y, s, both_ends)
    return np.mean(r * r, axis=1)


def segment_rms(y, s: int, both_ends: bool = False) -> np.ndarray:
    """RMS of the linearly detrended, non-overlapping segments of profile ``y``.

    Segments start at the beginning of ``y``; the tail that does not fill a
    segment is dropped unless ``both_ends`` is set, in which case the same
    number of segments is also taken from the end.
    """
    return np.sqrt(_segment_variance(np.asarray(y, dtype=float), int(s), both_ends))


def _loglog_fit(scales, values) -> LineFit:
    return least_squares_fit(np.log(np.asarray(scales, dtype=float)), np.log(values))


def dfa(x, grid: ScaleGrid | Sequence[int] | None = None, both_ends: bool = False):
    """Detrended fluctuation analysis.

    Returns ``(H, F, fit)``: the scaling exponent, the fluctuation function at
    each scale of ``grid`` and the log-log line fit it came from.
    """
    ts = as_series(x)
    grid = _as_grid(grid, len(ts))
    y = profile(ts)
    F = np.array([math.sqrt(np.mean(_segment_variance(y, s, both_ends))) for s in grid])
    if np.any(F <= 0.0):
        raise FractalisError("degenerate trend: zero fluctuation at some scale")
    fit = _loglog_fit(grid.scales, F)
    return fit.slope, F, fit


def _as_grid(grid, n) -> ScaleGrid:
    if grid is None:
        grid = default_scale_grid(n)
    elif not isinstance(grid, ScaleGrid):
        grid = ScaleGrid(tuple(grid))
    grid.check_length(n)
    return grid


def _qth_fluctuation(var: np.ndarray, q: float, floor_var: float) -> tuple[float, bool]:
    if q == 2.0:
        return math.sqrt(np.mean(var)), False
    floored = False
    if q <= 0.0:
        low = var < floor_var
        if low.any():
            var = np.where(low, floor_var, var)
            floored = True
    elif np.all(var == 0.0):
        return 0.0, False
    logv = np.log(var) if q <= 0.0 else np.log(np.where(var > 0.0, var, np.finfo(float).tiny))
    if q == 0.0:
        return math.exp(0.5 * np.mean(logv)), floored
    return math.exp((logsumexp(0.5 * q * logv) - math.log(var.size)) / q), floored


def mfdfa(x, grid: ScaleGrid | Sequence[int] | None = None, qs: QGrid | Sequence[float] | None = None,
          both_ends: bool = False) -> FluctuationField:
    """Multifractal DFA: q-th order fluctuation functions and their exponents H(q).

    ``q = 0`` uses the logarithmic mean. Before non-positive moments each
    segment RMS is floored at ``1e-12 * RMS(profile)`` and a
    :class:`FloorWarning` is issued if that changed anything.
    """
    ts = as_series(x)
    grid = _as_grid(grid, len(ts))
    qs = DEFAULT_QS if qs is None else (qs if isinstance(qs, QGrid) else QGrid(tuple(qs)))
    y = profile(ts)
    floor_var = (EPS_FLOOR * math.sqrt(np.mean(y * y))) ** 2
    F = np.empty((len(qs), len(grid)))
    any_floor = False
    for j, s in enumerate(grid):
        var = _segment_variance(y, s, both_ends)
        for i, q in enumerate(qs):
            F[i, j], fl = _qth_fluctuation(var, q, floor_var)
            any_floor |= fl
    if any_floor:
        warnings.warn("segment fluctuations floored before negative moments", FloorWarning,
                      stacklevel=2)
    if np.any(F <= 0.0):
        raise FractalisError("degenerate trend: zero fluctuation at some scale")
    H = np.empty(len(qs))
    r2 = np.empty(len(qs))
    for i in range(len(qs)):
        fit = _loglog_fit(grid.scales, F[i])
        H[i], r2[i] = fit.slope, fit.r_squared
    return FluctuationField(grid, qs, F, H, r2, any_floor)


def mass_exponents(field: FluctuationField) -> MultifractalSpectrum:
    """Mass exponents ``t(q) = q H(q) - 1``."""
    q = np.asarray(field.qs.qs)
    return MultifractalSpectrum(q, q * field.H - 1.0)


def spectrum(field_or_t, t: np.ndarray | None = None) -> MultifractalSpectrum:
    """Singularity exponents and multifractal spectrum from the mass exponents.

    ``h`` is the forward difference of ``t`` over consecutive q values and
    ``D = q' h - t(q')`` is evaluated at the lower q of each pair, so a grid
    of ``m`` moments gives ``m - 1`` points.
    """
    if isinstance(field_or_t, FluctuationField):
        q = np.asarray(field_or_t.qs.qs)
        if t is None:
            t = mass_exponents(field_or_t).t
    elif isinstance(field_or_t, MultifractalSpectrum):
        q, t = field_or_t.qs, field_or_t.t if t is None else t
    else:
        q = np.asarray(field_or_t, dtype=float)
    t = np.asarray(t, dtype=float)
    if q.size < 2 or q.shape != t.shape:
        raise FractalisError("need at least 2 (q, t) pairs of equal length")
    dq = np.diff(q)
    if np.any(dq == 0.0):
        raise FractalisError("duplicate q values")
    h = np.diff(t) / dq
    D = q[:-1] * h - t[:-1]
    return MultifractalSpectrum(q, t, h, D)


def characterize(x, grid: ScaleGrid | Sequence[int] | None = None) -> Characterization:
    """Decide between fGn and fBm from the DFA exponent.

    An exponent below 1 is read as fGn with that Hurst exponent; otherwise
    the signal is taken as fBm with exponent ``H - 1``. Exactly 1 is fGn.
    """
    ts = as_series(x)
    if len(ts) < 512:
        raise FractalisError("characterize needs at least 512 samples")
    H, _, _ = dfa(ts, grid)
    if H <= 1.0:
        return Characterization("fGn", H, H)
    return Characterization("fBm", H - 1.0, H)
