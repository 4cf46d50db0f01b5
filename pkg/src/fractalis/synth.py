"""Synthetic signals with known fractal exponents.

These are the reference signals the estimators are checked against:
fractional Gaussian noise / Brownian motion (Hurst exponent), the
Weierstrass function (graph dimension) and a binomial multiplicative
cascade (closed-form mass exponents).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import FractalisError, TimeSeries

KINDS = ("white_noise", "fgn", "fbm", "weierstrass", "binomial_cascade")


def fgn_autocovariance(hurst: float, lags) -> np.ndarray:
    """Unit-variance fGn autocovariance at integer ``lags``."""
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k ** h2 + np.abs(k - 1) ** h2)


def _check_hurst(hurst):
    if not 0.0 < hurst < 1.0:
        raise FractalisError(f"hurst must lie in (0, 1), got {hurst}")


def _check_length(n):
    if int(n) != n or n < 16:
        raise FractalisError(f"length must be an integer >= 16, got {n}")


def gen_fgn(hurst: float, n: int, seed: int = 0, rate_hz: float = 1.0) -> TimeSeries:
    """Fractional Gaussian noise by circulant embedding (Davies-Harte).

    The covariance row of length ``2n`` is diagonalised by the FFT; the
    sample has exactly the fGn autocovariance.
    """
    _check_hurst(hurst)
    _check_length(n)
    m = 2 * n
    row = fgn_autocovariance(hurst, np.concatenate([np.arange(n + 1), np.arange(n - 1, 0, -1)]))
    eig = np.fft.fft(row).real
    if eig.min() < -1e-9 * eig.max():
        raise FractalisError("circulant embedding is not positive definite")
    eig = np.clip(eig, 0.0, None)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    x = np.fft.fft(np.sqrt(eig / m) * z).real[:n]
    return TimeSeries(x, rate_hz)


def gen_fbm(hurst: float, n: int, seed: int = 0, rate_hz: float = 1.0) -> TimeSeries:
    """Fractional Brownian motion: running sum of :func:`gen_fgn`."""
    return TimeSeries(np.cumsum(gen_fgn(hurst, n, seed, rate_hz).samples), rate_hz)


def gen_white_noise(n: int, seed: int = 0, rate_hz: float = 1.0) -> TimeSeries:
    _check_length(n)
    return TimeSeries(np.random.default_rng(seed).standard_normal(n), rate_hz)


def weierstrass_terms(gamma: float, samples_per_unit: float) -> int:
    """Index of the highest Weierstrass term that is not aliased."""
    nyquist = samples_per_unit / 2.0
    if nyquist <= 1.0:
        return 0
    return int(math.floor(math.log(nyquist) / math.log(gamma) + 1e-12))


def gen_weierstrass(dimension: float, gamma: float, n: int,
                    samples_per_unit: float = 1024.0) -> TimeSeries:
    """Weierstrass function ``sum_k gamma**((D-2)k) cos(2 pi gamma**k t)``.

    Terms run from ``k = 0`` up to the highest frequency below Nyquist of a
    grid with ``samples_per_unit`` samples per unit of ``t``. The graph has
    box dimension ``dimension`` between the grid step and one unit.
    """
    if not 1.0 < dimension < 2.0:
        raise FractalisError("dimension must lie in (1, 2)")
    if not gamma > 1.0:
        raise FractalisError("gamma must exceed 1")
    _check_length(n)
    if samples_per_unit <= 0:
        raise FractalisError("samples_per_unit must be positive")
    t = np.arange(n) / samples_per_unit
    x = np.zeros(n)
    for k in range(weierstrass_terms(gamma, samples_per_unit) + 1):
        x += gamma ** ((dimension - 2.0) * k) * np.cos(2.0 * np.pi * gamma ** k * t)
    return TimeSeries(x, samples_per_unit)


def gen_binomial_cascade(p: float, depth: int, seed: int = 0) -> TimeSeries:
    """Binomial multiplicative cascade of ``2**depth`` cells and total mass 1.

    Each cell hands a fraction ``p`` of its mass to one child and ``1 - p``
    to the other; which child gets ``p`` is drawn at random.
    """
    if not 0.5 < p < 1.0:
        raise FractalisError("p must lie in (0.5, 1)")
    if int(depth) != depth or not 4 <= depth <= 24:
        raise FractalisError("depth must be an integer in [4, 24]")
    rng = np.random.default_rng(seed)
    mass = np.ones(1)
    for _ in range(int(depth)):
        left = np.where(rng.random(mass.size) < 0.5, p, 1.0 - p)
        mass = np.column_stack([mass * left, mass * (1.0 - left)]).ravel()
    return TimeSeries(mass, 1.0)


def cascade_mass_exponent(p: float, q) -> np.ndarray:
    """Analytic ``tau(q) = -log2(p**q + (1-p)**q)`` of the binomial cascade."""
    q = np.asarray(q, dtype=float)
    return -np.log(p ** q + (1.0 - p) ** q) / math.log(2.0)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    length: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FractalisError(f"unknown generator kind {self.kind!r}")
        if self.kind == "binomial_cascade":
            return
        _check_length(self.length)

    def generate(self) -> TimeSeries:
        p = self.params
        rate = p.get("rate_hz", 1.0)
        if self.kind == "white_noise":
            return gen_white_noise(self.length, self.seed, rate)
        if self.kind == "fgn":
            return gen_fgn(p["hurst"], self.length, self.seed, rate)
        if self.kind == "fbm":
            return gen_fbm(p["hurst"], self.length, self.seed, rate)
        if self.kind == "weierstrass":
            return gen_weierstrass(p["dimension"], p.get("gamma", 5.0), self.length,
                                   p.get("samples_per_unit", 1024.0))
        depth = int(round(math.log2(self.length)))
        if 2 ** depth != self.length:
            raise FractalisError("binomial cascade length must be a power of two")
        return gen_binomial_cascade(p["p"], depth, self.seed)


def synthetic_trials(n_subjects: int = 16, n_trials: int = 20, channels=("F3", "F4"),
                     hurst_low: float = 0.3, hurst_high: float = 0.8, duration_s: float = 60.0,
                     rate_hz: float = 128.0, seed: int = 0, shuffle_labels: bool = False):
    """Two-class trial set: class A channels are fGn(``hurst_low``), class B fGn(``hurst_high``).

    Each subject gets ``n_trials`` trials split evenly between the classes.
    Class A is rated in [1, 5) and class B in (5, 9] for both valence and
    arousal; ``shuffle_labels`` permutes the ratings within each subject.
    """
    from .core import Trial

    n = int(round(duration_s * rate_hz))
    rng = np.random.default_rng(seed)
    trials = []
    for subj in range(n_subjects):
        classes = np.arange(n_trials) % 2
        ratings = np.where(classes == 1, rng.uniform(5.5, 9.0, n_trials),
                           rng.uniform(1.0, 4.5, n_trials))
        if shuffle_labels:
            ratings = rng.permutation(ratings)
        for k in range(n_trials):
            hurst = hurst_high if classes[k] else hurst_low
            chans = {}
            for c, name in enumerate(channels):
                s = int(rng.integers(2 ** 63 - 1))
                chans[name] = gen_fgn(hurst, n, s, rate_hz)
            r = float(ratings[k])
            trials.append(Trial(chans, f"s{subj:02d}", {"valence": r, "arousal": r}))
    return trials
