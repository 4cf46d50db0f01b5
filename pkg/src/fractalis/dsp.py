"""EEG band splitting and Welch spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .core import FractalisError, TimeSeries, as_series

BUTTERWORTH_ORDER = 10
WELCH_SEGMENT = 512
N_PSD_BINS = 64


@dataclass(frozen=True)
class BandSpec:
    name: str
    lo_hz: float | None = None
    hi_hz: float | None = None

    @property
    def is_raw(self) -> bool:
        return self.lo_hz is None

    def check(self, rate_hz: float):
        if self.is_raw:
            return
        if not 0.0 < self.lo_hz < self.hi_hz < rate_hz / 2.0:
            raise FractalisError(
                f"band {self.name} ({self.lo_hz}-{self.hi_hz} Hz) outside (0, {rate_hz / 2} Hz)")


BANDS = {
    "raw": BandSpec("raw"),
    "alpha": BandSpec("alpha", 8.0, 13.0),
    "beta": BandSpec("beta", 14.0, 29.0),
    "gamma": BandSpec("gamma", 30.0, 45.0),
}


def get_band(band) -> BandSpec:
    if isinstance(band, BandSpec):
        return band
    try:
        return BANDS[band]
    except KeyError:
        raise FractalisError(f"unknown band {band!r}; expected one of {sorted(BANDS)}") from None


@dataclass(frozen=True)
class FilterRealization:
    """Cascade of biquads ``(b0, b1, b2, a1, a2)`` with ``a0 = 1``."""

    sections: tuple[tuple[float, float, float, float, float], ...]

    @property
    def sos(self) -> np.ndarray:
        s = np.asarray(self.sections, dtype=float)
        return np.column_stack([s[:, :3], np.ones(len(s)), s[:, 3:]])

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots([1.0, a1, a2]) for *_, a1, a2 in self.sections])

    def response(self, freqs_hz, rate_hz: float) -> np.ndarray:
        """Complex frequency response at ``freqs_hz``."""
        _, h = signal.sosfreqz(self.sos, worN=np.atleast_1d(np.asarray(freqs_hz, dtype=float)),
                               fs=rate_hz)
        return h

    def gain_db(self, freqs_hz, rate_hz: float) -> np.ndarray:
        return 20.0 * np.log10(np.abs(self.response(freqs_hz, rate_hz)))


def design_butterworth_bandpass(lo_hz: float, hi_hz: float, rate_hz: float,
                                order: int = BUTTERWORTH_ORDER) -> FilterRealization:
    """Digital Butterworth bandpass as second-order sections.

    Analog prototype, lowpass-to-bandpass transform and a prewarped bilinear
    transform, so the band edges sit at -3 dB. ``order`` is the prototype
    order; the bandpass has ``2 * order`` poles.
    """
    BandSpec("custom", lo_hz, hi_hz).check(rate_hz)
    sos = signal.butter(order, [lo_hz, hi_hz], btype="bandpass", fs=rate_hz, output="sos")
    sections = tuple((b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0)
                     for b0, b1, b2, a0, a1, a2 in sos)
    real = FilterRealization(sections)
    if np.any(np.abs(real.poles()) >= 1.0):
        raise FractalisError("designed filter is unstable")
    return real


def _padlen(sos: np.ndarray) -> int:
    # same default as scipy.signal.sosfiltfilt
    n_zeros = min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum())
    return 3 * (2 * len(sos) + 1 - n_zeros)


def filter_band(x, band) -> TimeSeries:
    """Zero-phase (forward-backward) band filtering; ``raw`` passes through."""
    ts = as_series(x)
    band = get_band(band)
    if band.is_raw:
        return ts
    real = design_butterworth_bandpass(band.lo_hz, band.hi_hz, ts.rate_hz)
    sos = real.sos
    if len(ts) <= _padlen(sos):
        raise FractalisError(
            f"signal of {len(ts)} samples too short for filtering (needs > {_padlen(sos)})")
    return TimeSeries(signal.sosfiltfilt(sos, ts.samples), ts.rate_hz)


def psd_bin_edges(rate_hz: float, n_bins: int = N_PSD_BINS) -> np.ndarray:
    """Edges of ``n_bins`` bins centred on multiples of ``nyquist / n_bins``.

    The first bin starts at 0 and the last one is closed at Nyquist.
    """
    width = rate_hz / 2.0 / n_bins
    edges = (np.arange(n_bins + 1) - 0.5) * width
    edges[0] = 0.0
    edges[-1] = rate_hz / 2.0
    return edges


def welch_spectrum(x, nperseg: int = WELCH_SEGMENT) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed, 50%-overlap Welch density estimate (one-sided)."""
    ts = as_series(x)
    if len(ts) < nperseg:
        raise FractalisError(f"Welch PSD needs at least {nperseg} samples, got {len(ts)}")
    return signal.welch(ts.samples, fs=ts.rate_hz, window="hann", nperseg=nperseg,
                        noverlap=nperseg // 2, detrend=False, scaling="density")


def welch_psd(x, n_features: int = N_PSD_BINS, nperseg: int = WELCH_SEGMENT) -> np.ndarray:
    """Welch PSD averaged into ``n_features`` bins spanning 0..Nyquist.

    Each feature is the mean density of the Welch frequencies falling in its
    bin, so ``sum(psd * np.diff(psd_bin_edges(rate)))`` approximates the mean
    square of ``x``.
    """
    ts = as_series(x)
    freqs, pxx = welch_spectrum(ts, nperseg)
    edges = psd_bin_edges(ts.rate_hz, n_features)
    idx = np.clip(np.searchsorted(edges, freqs, side="right") - 1, 0, n_features - 1)
    counts = np.bincount(idx, minlength=n_features)
    if np.any(counts == 0):
        raise FractalisError("Welch resolution too coarse for the requested number of bins")
    return np.bincount(idx, weights=pxx, minlength=n_features) / counts
