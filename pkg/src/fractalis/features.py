"""Per-channel feature families and their scikit-learn transformer wrappers.

Four families are available, each producing a fixed number of values per
channel and band for a 60 s, 128 Hz recording:

========  =====  ====================================================
family    dim    content
========  =====  ====================================================
mfd       90     30 local MFD scales x (mean, median, std) over windows
mfdfa     30     15 singularity exponents h, then 15 spectrum values D
hfd       7      Higuchi dimension of each 15 s window
psd       64     Welch density in 64 bins from 0 to Nyquist
========  =====  ====================================================
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from .core import FractalisError, TimeSeries, Trial, as_series, summarize_columns, window_split
from .dsp import filter_band, get_band, welch_psd
from .fluctuation import DEFAULT_QS, QGrid, ScaleGrid, mfdfa, spectrum
from .morphofd import DEFAULT_SLOPE_WINDOW, fractogram, higuchi_fd

WINDOW_S = 15.0
OVERLAP = 0.5
N_MFD_SCALES = 30
HFD_K_MAX = 32

LEFT = ("Fp1", "AF3", "F7", "F3", "FC5", "FC1", "T7", "C3", "CP5", "CP1", "P3", "P7")
RIGHT = ("Fp2", "AF4", "F4", "F8", "FC2", "FC6", "C4", "T8", "CP2", "CP6", "P4", "P8")


@dataclass(frozen=True)
class ChannelSet:
    name: str
    channels: tuple[str, ...]

    def __post_init__(self):
        if not self.channels:
            raise FractalisError("empty channel set")


def channel_set(spec) -> ChannelSet:
    """``"left"``, ``"right"``, a comma-separated string or a sequence of names."""
    if isinstance(spec, ChannelSet):
        return spec
    if spec == "left":
        return ChannelSet("left", LEFT)
    if spec == "right":
        return ChannelSet("right", RIGHT)
    names = spec.split(",") if isinstance(spec, str) else list(spec)
    return ChannelSet("custom", tuple(n.strip() for n in names if n.strip()))


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: np.ndarray
    provenance: tuple  # (family, band, channels)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.names),):
            raise FractalisError("feature names and values differ in length")
        if not np.all(np.isfinite(v)):
            bad = [n for n, x in zip(self.names, v) if not np.isfinite(x)]
            raise FractalisError(f"non-finite features: {', '.join(bad[:5])}")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.names)


def mfd_scale_indices(n_anchors: int, n_features: int = N_MFD_SCALES) -> np.ndarray:
    """Linearly spaced positions on the local-MFD curve."""
    if n_anchors < n_features:
        raise FractalisError(
            f"local MFD curve has {n_anchors} scales, fewer than {n_features} features")
    return np.rint(np.linspace(0, n_anchors - 1, n_features)).astype(int)


def mfd_window_matrix(x, window_s: float = WINDOW_S, overlap: float = OVERLAP,
                      slope_window: int = DEFAULT_SLOPE_WINDOW, n_features: int = N_MFD_SCALES,
                      flat_as_one: bool = False):
    """Sampled local MFDs, one row per analysis window.

    Returns ``(scales, matrix)`` where ``matrix[w, i]`` is the local dimension
    of window ``w`` at ``scales[i]``. The cover runs up to 1/7 of the window.
    """
    ts = as_series(x)
    window = int(round(window_s * ts.rate_hz))
    hop = max(1, int(round(window * (1.0 - overlap))))
    if window > len(ts):
        raise FractalisError(f"signal shorter than one {window_s} s window")
    max_scale = window // 7
    if max_scale < slope_window + n_features - 1:
        raise FractalisError(f"window of {window} samples too short for {n_features} MFD scales")
    fg = fractogram(ts, max_scale, slope_window, window=window, hop=hop, flat_as_one=flat_as_one)
    idx = mfd_scale_indices(fg.scales.size, n_features)
    return fg.scales[idx], fg.D[idx].T


def extract_mfd_features(x, window_s: float = WINDOW_S, overlap: float = OVERLAP,
                         slope_window: int = DEFAULT_SLOPE_WINDOW,
                         n_features: int = N_MFD_SCALES, flat_as_one: bool = False) -> FeatureVector:
    """Mean, median and std over windows of 30 sampled local MFDs (stat-major)."""
    scales, m = mfd_window_matrix(x, window_s, overlap, slope_window, n_features, flat_as_one)
    stats = summarize_columns(m)
    names = [f"mfd_{stat}_s{s}" for stat in ("mean", "median", "std") for s in scales]
    return FeatureVector(names, np.concatenate(stats), ("mfd", None, None))


def extract_mfdfa_features(x, fraction: float = 0.5, grid: ScaleGrid | None = None,
                           qs: QGrid | None = None) -> FeatureVector:
    """Singularity exponents then spectrum values from the trailing ``fraction`` of ``x``."""
    ts = as_series(x)
    if not 0.0 < fraction <= 1.0:
        raise FractalisError("fraction must lie in (0, 1]")
    keep = int(round(fraction * len(ts)))
    tail = TimeSeries(ts.samples[len(ts) - keep:], ts.rate_hz)
    grid = ScaleGrid.log_spaced(30, 500, 10) if grid is None else grid
    qs = DEFAULT_QS if qs is None else qs
    if len(tail) < 4 * grid.scales[-1]:
        raise FractalisError(
            f"retained segment ({len(tail)} samples) shorter than 4x the largest scale")
    sp = spectrum(mfdfa(tail, grid, qs))
    q = sp.qs[:-1]
    names = [f"mfdfa_h_q{v:+.3f}" for v in q] + [f"mfdfa_D_q{v:+.3f}" for v in q]
    return FeatureVector(names, np.concatenate([sp.h, sp.D]), ("mfdfa", None, None))


def extract_hfd_features(x, window_s: float = WINDOW_S, overlap: float = OVERLAP,
                         k_max: int = HFD_K_MAX) -> FeatureVector:
    windows = window_split(x, window_s, overlap)
    vals = [higuchi_fd(w, k_max) for w in windows]
    return FeatureVector([f"hfd_w{i}" for i in range(len(vals))], vals, ("hfd", None, None))


def extract_psd_features(x) -> FeatureVector:
    ts = as_series(x)
    vals = welch_psd(ts)
    step = ts.rate_hz / 2.0 / vals.size
    return FeatureVector([f"psd_{i * step:g}Hz" for i in range(vals.size)], vals,
                         ("psd", None, None))


FAMILIES: dict[str, Callable[..., FeatureVector]] = {
    "mfd": extract_mfd_features,
    "mfdfa": extract_mfdfa_features,
    "hfd": extract_hfd_features,
    "psd": extract_psd_features,
}

FAMILY_DIMS = {"mfd": 90, "mfdfa": 30, "hfd": 7, "psd": 64}


def _family(name) -> Callable[..., FeatureVector]:
    try:
        return FAMILIES[name]
    except KeyError:
        raise FractalisError(f"unknown feature family {name!r}; expected one of {sorted(FAMILIES)}") from None


def extract_trial(trial: Trial, family: str, band="raw", chans="left", **params) -> FeatureVector:
    """Band-filter each channel of ``chans``, extract ``family`` and concatenate channel-major."""
    extract = _family(family)
    band = get_band(band)
    cs = channel_set(chans)
    names, values = [], []
    for ch in cs.channels:
        fv = extract(filter_band(trial[ch], band), **params)
        names.extend(f"{ch}_{band.name}_{n}" for n in fv.names)
        values.append(fv.values)
    return FeatureVector(names, np.concatenate(values), (family, band.name, cs.channels))


def n_threads() -> int:
    try:
        return max(1, int(os.environ.get("FRACTALIS_THREADS", "1")))
    except ValueError:
        return 1


def extract_trials(trials: Sequence[Trial], family: str, band="raw", chans="left",
                   n_jobs: int | None = None, **params) -> tuple[list[str], np.ndarray]:
    """Feature matrix (one row per trial, in input order) and its column names."""
    if not trials:
        raise FractalisError("no trials to extract")
    n_jobs = n_threads() if n_jobs is None else n_jobs

    def one(t):
        return extract_trial(t, family, band, chans, **params)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            fvs = list(pool.map(one, trials))
    else:
        fvs = [one(t) for t in trials]
    names = fvs[0].names
    if any(fv.names != names for fv in fvs):
        raise FractalisError("trials produced different feature layouts")
    return list(names), np.vstack([fv.values for fv in fvs])


class _SignalFeatures(TransformerMixin, BaseEstimator):
    """Stateless transformer mapping rows of raw signals to one feature family."""

    family = None

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        self.feature_names_ = list(self._extract(TimeSeries(X[0], self.rate_hz)).names)
        return self

    def transform(self, X):
        X = check_array(X)
        return np.vstack([self._extract(TimeSeries(row, self.rate_hz)).values for row in X])

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.feature_names_, dtype=object)

    def _extract(self, ts):
        raise NotImplementedError


class MFDFeatures(_SignalFeatures):
    def __init__(self, rate_hz=128.0, window_s=WINDOW_S, overlap=OVERLAP,
                 slope_window=DEFAULT_SLOPE_WINDOW, n_features=N_MFD_SCALES, flat_as_one=False):
        self.rate_hz = rate_hz
        self.window_s = window_s
        self.overlap = overlap
        self.slope_window = slope_window
        self.n_features = n_features
        self.flat_as_one = flat_as_one

    def _extract(self, ts):
        return extract_mfd_features(ts, self.window_s, self.overlap, self.slope_window,
                                    self.n_features, self.flat_as_one)


class MFDFAFeatures(_SignalFeatures):
    def __init__(self, rate_hz=128.0, fraction=0.5, scales=None, qs=None):
        self.rate_hz = rate_hz
        self.fraction = fraction
        self.scales = scales
        self.qs = qs

    def _extract(self, ts):
        grid = None if self.scales is None else ScaleGrid(tuple(self.scales))
        qs = None if self.qs is None else QGrid(tuple(self.qs))
        return extract_mfdfa_features(ts, self.fraction, grid, qs)


class HiguchiFeatures(_SignalFeatures):
    def __init__(self, rate_hz=128.0, window_s=WINDOW_S, overlap=OVERLAP, k_max=HFD_K_MAX):
        self.rate_hz = rate_hz
        self.window_s = window_s
        self.overlap = overlap
        self.k_max = k_max

    def _extract(self, ts):
        return extract_hfd_features(ts, self.window_s, self.overlap, self.k_max)


class WelchFeatures(_SignalFeatures):
    def __init__(self, rate_hz=128.0):
        self.rate_hz = rate_hz

    def _extract(self, ts):
        return extract_psd_features(ts)


class TrialFeatures(TransformerMixin, BaseEstimator):
    """Transformer from a list of :class:`Trial` objects to a feature matrix."""

    def __init__(self, family="mfd", band="raw", channels="left", n_jobs=1):
        self.family = family
        self.band = band
        self.channels = channels
        self.n_jobs = n_jobs

    def fit(self, trials, y=None):
        names, _ = extract_trials(list(trials)[:1], self.family, self.band, self.channels, 1)
        self.feature_names_ = names
        return self

    def transform(self, trials):
        return extract_trials(list(trials), self.family, self.band, self.channels, self.n_jobs)[1]

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.feature_names_, dtype=object)
