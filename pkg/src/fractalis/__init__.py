"""Multiscale and multifractal analysis of 1-D signals, with an EEG feature pipeline."""

__version__ = "0.1.0"

from .core import FractalisError, LineFit, TimeSeries, Trial, least_squares_fit, summarize, window_split
from .fluctuation import characterize, dfa, mass_exponents, mfdfa, profile, spectrum
from .morphofd import fractal_dimension_global, fractogram, higuchi_fd, multiscale_cover

__all__ = [
    "FractalisError", "LineFit", "TimeSeries", "Trial", "characterize", "dfa",
    "fractal_dimension_global", "fractogram", "higuchi_fd", "least_squares_fit",
    "mass_exponents", "mfdfa", "multiscale_cover", "profile", "spectrum", "summarize",
    "window_split",
]
