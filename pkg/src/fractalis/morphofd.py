"""Morphological multiscale fractal dimension and the Higuchi baseline.

The cover of the signal graph at scale ``s`` is approximated with 1-D
flat dilations/erosions: a running max/min over a ``2s + 1`` sample
window, obtained by ``s`` passes of the radius-1 operator. The area
``A(s) = sum(dilation_s - erosion_s)`` behaves like ``s**(2 - D)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import FractalisError, as_series, least_squares_fit, window_bounds

DEFAULT_SLOPE_WINDOW = 7
DEFAULT_FIT_RANGE = (3, 30)


class FlatSignalError(FractalisError):
    """The signal (or window) is constant, so its cover has zero area."""


@dataclass(frozen=True)
class CoverProfile:
    scales: np.ndarray
    areas: np.ndarray


@dataclass(frozen=True)
class Fractogram:
    """Local dimensions ``D[i, j]`` at ``scales[i]`` for the window starting at ``times[j]``.

    ``raw`` holds the unclamped ``2 - slope`` values.
    """

    times: np.ndarray
    scales: np.ndarray
    D: np.ndarray
    raw: np.ndarray
    slope_window: int


def dilate1(x: np.ndarray) -> np.ndarray:
    """Radius-1 flat dilation with replicated edges."""
    p = np.concatenate([x[:1], x, x[-1:]])
    return np.maximum(np.maximum(p[:-2], p[1:-1]), p[2:])


def erode1(x: np.ndarray) -> np.ndarray:
    """Radius-1 flat erosion with replicated edges."""
    p = np.concatenate([x[:1], x, x[-1:]])
    return np.minimum(np.minimum(p[:-2], p[1:-1]), p[2:])


def morph_pair(x, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Dilation and erosion of ``x`` at integer radius ``s``."""
    d = e = np.asarray(x, dtype=float)
    for _ in range(int(s)):
        d, e = dilate1(d), erode1(e)
    return d, e


def multiscale_cover(x, max_scale: int) -> CoverProfile:
    """Cover areas ``A(s)`` for ``s = 1..max_scale``."""
    v = np.asarray(as_series(x).samples)
    if not 1 <= max_scale <= v.size // 2:
        raise FractalisError(f"max_scale must lie in [1, {v.size // 2}], got {max_scale}")
    if np.ptp(v) == 0.0:
        raise FlatSignalError("degenerate flat signal: cover area is zero")
    areas = np.empty(max_scale)
    d = e = v
    for i in range(max_scale):
        d, e = dilate1(d), erode1(e)
        areas[i] = np.sum(d - e)
    return CoverProfile(np.arange(1, max_scale + 1), areas)


def _check_range(cover: CoverProfile, lo: int, hi: int):
    if lo < cover.scales[0] or hi > cover.scales[-1] or hi - lo + 1 < 3:
        raise FractalisError(f"fit range ({lo}, {hi}) must hold >= 3 scales of the cover")


def fractal_dimension_raw(cover: CoverProfile, fit_range=DEFAULT_FIT_RANGE) -> float:
    """Unclamped ``2 - slope`` of ``log A(s)`` against ``log s`` over ``fit_range``."""
    lo, hi = (int(v) for v in fit_range)
    _check_range(cover, lo, hi)
    sel = (cover.scales >= lo) & (cover.scales <= hi)
    a = cover.areas[sel]
    if np.any(a <= 0.0):
        raise FlatSignalError("flat segment: zero cover area in fit range")
    return 2.0 - least_squares_fit(np.log(cover.scales[sel]), np.log(a)).slope


def fractal_dimension_global(cover: CoverProfile, fit_range=DEFAULT_FIT_RANGE) -> float:
    return float(np.clip(fractal_dimension_raw(cover, fit_range), 1.0, 2.0))


def local_dimensions(cover: CoverProfile, slope_window: int = DEFAULT_SLOPE_WINDOW):
    """Sliding log-log slopes over ``slope_window`` consecutive scales.

    Returns ``(anchor_scales, raw_D)`` where each anchor is the smallest scale
    of its window.
    """
    w = int(slope_window)
    if w < 3:
        raise FractalisError("slope window must span at least 3 scales")
    if w > cover.scales.size:
        raise FractalisError("slope window wider than the scale grid")
    if np.any(cover.areas <= 0.0):
        raise FlatSignalError("flat segment: zero cover area")
    lx = sliding_window_view(np.log(cover.scales.astype(float)), w)
    ly = sliding_window_view(np.log(cover.areas), w)
    xc = lx - lx.mean(axis=1, keepdims=True)
    slope = np.sum(xc * (ly - ly.mean(axis=1, keepdims=True)), axis=1) / np.sum(xc * xc, axis=1)
    return cover.scales[:slope.size], 2.0 - slope


def fractogram(x, max_scale: int, slope_window: int = DEFAULT_SLOPE_WINDOW,
               window: int | None = None, hop: int | None = None,
               flat_as_one: bool = False) -> Fractogram:
    """Time-scale field of local dimensions.

    The signal is cut into analysis windows of ``window`` samples stepped by
    ``hop`` (default: one window covering the whole signal). Each window gets
    its own cover up to ``max_scale`` and local dimensions for anchor scales
    ``1..max_scale - slope_window + 1``. A constant window raises
    :class:`FlatSignalError` unless ``flat_as_one`` maps it to ``D = 1``.
    """
    v = np.asarray(as_series(x).samples)
    if slope_window < 3:
        raise FractalisError("slope window must span at least 3 scales")
    if max_scale < slope_window:
        raise FractalisError("max_scale must be at least the slope window")
    window = v.size if window is None else int(window)
    hop = window if hop is None else int(hop)
    starts = window_bounds(v.size, window, hop)
    anchors = np.arange(1, max_scale - slope_window + 2)
    raw = np.empty((anchors.size, len(starts)))
    for j, t in enumerate(starts):
        try:
            cover = multiscale_cover(v[t:t + window], max_scale)
        except FlatSignalError:
            if not flat_as_one:
                raise
            raw[:, j] = 1.0
            continue
        raw[:, j] = local_dimensions(cover, slope_window)[1]
    return Fractogram(np.asarray(starts), anchors, np.clip(raw, 1.0, 2.0), raw, int(slope_window))


def higuchi_curve_lengths(x, k_max: int) -> np.ndarray:
    """Mean normalised curve length ``L(k)`` for ``k = 1..k_max``."""
    v = np.asarray(as_series(x).samples)
    n = v.size
    L = np.empty(k_max)
    for k in range(1, k_max + 1):
        lm = np.empty(k)
        for m in range(k):
            sub = v[m::k]
            n_int = sub.size - 1
            lm[m] = np.abs(np.diff(sub)).sum() * (n - 1) / (n_int * k) / k
        L[k - 1] = lm.mean()
    return L


def higuchi_fd(x, k_max: int = 32) -> float:
    """Higuchi fractal dimension: minus the slope of ``log L(k)`` vs ``log k``."""
    v = np.asarray(as_series(x).samples)
    if k_max < 2 or k_max > v.size // 4:
        raise FractalisError(f"k_max must lie in [2, {v.size // 4}], got {k_max}")
    if np.ptp(v) == 0.0:
        raise FlatSignalError("Higuchi dimension undefined for a constant signal")
    L = higuchi_curve_lengths(v, k_max)
    return -least_squares_fit(np.log(np.arange(1, k_max + 1)), np.log(L)).slope
