import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import fractalis.fluctuation as fl
from fractalis.core import FractalisError
from fractalis.fluctuation import (DEFAULT_QS, FloorWarning, QGrid, ScaleGrid, characterize,
                                   default_scale_grid, detrended_residuals, dfa, mass_exponents,
                                   mfdfa, profile, segment_rms, spectrum)
from fractalis.synth import cascade_mass_exponent, gen_binomial_cascade, gen_fbm, gen_fgn

SMALL_GRID = ScaleGrid((4, 8, 16, 32))
DYADIC = ScaleGrid(tuple(2 ** k for k in range(4, 12)))
noise = arrays(float, st.integers(128, 400), elements=st.floats(-100, 100))


def rough(x):
    return np.ptp(x) > 1e-6 and np.all(np.diff(x) != 0.0)


class TestGrids:
    def test_log_spaced_default(self):
        g = ScaleGrid.log_spaced(30, 500, 10)
        assert g.scales[0] == 30 and g.scales[-1] == 500 and len(g) == 10

    def test_log_spaced_collapses_duplicates(self):
        g = ScaleGrid.log_spaced(4, 8, 10)
        assert list(g.scales) == sorted(set(g.scales))

    @pytest.mark.parametrize("scales", [(4, 8, 16), (4, 8, 8, 16), (3, 8, 16, 32)])
    def test_invalid(self, scales):
        with pytest.raises(FractalisError):
            ScaleGrid(scales)

    def test_too_short(self):
        with pytest.raises(FractalisError):
            dfa(np.random.default_rng(0).standard_normal(100), ScaleGrid((4, 8, 16, 32)))

    def test_q_grid(self):
        assert len(DEFAULT_QS) == 16
        assert not DEFAULT_QS.has_zero
        np.testing.assert_allclose(np.diff(DEFAULT_QS.qs), 2 / 3)

    def test_default_scale_grid_shrinks(self):
        assert default_scale_grid(2 ** 14).scales[-1] == 500
        assert default_scale_grid(1000).scales[-1] <= 250


class TestProfileAndResiduals:
    def test_profile_examples(self):
        np.testing.assert_allclose(profile([1, 1, 1]), [0, 0, 0])
        np.testing.assert_allclose(profile([1, -1, 1, -1]), [1, 0, 1, 0])

    @given(noise, st.integers(4, 32))
    def test_residuals_orthogonal_to_line(self, y, s):
        r = detrended_residuals(y, s)
        n = np.arange(s)
        scale = 1 + np.abs(y).max()
        np.testing.assert_allclose(r.sum(axis=1), 0, atol=1e-9 * s * scale)
        np.testing.assert_allclose(r @ n, 0, atol=1e-9 * s * s * scale)

    def test_linear_profile_zero(self):
        y = 3.0 * np.arange(64) + 1.0
        np.testing.assert_allclose(segment_rms(y, 8), 0, atol=1e-12)
        with pytest.raises(FractalisError, match="degenerate trend"):
            dfa(np.ones(256) + 0.0 * np.arange(256), SMALL_GRID)

    def test_alternating_periodic(self):
        y = profile(np.tile([1.0, -1.0], 32))
        f = segment_rms(y, 4)
        # one segment [1, 0, 1, 0]: residuals [.2, -.6, .6, -.2]
        np.testing.assert_allclose(f, math.sqrt(0.2), rtol=1e-12)

    def test_scale_bounds(self):
        with pytest.raises(FractalisError):
            segment_rms(np.arange(20.0), 3)
        with pytest.raises(FractalisError):
            segment_rms(np.arange(20.0), 11)

    def test_both_ends_doubles_segments(self):
        y = np.random.default_rng(1).standard_normal(50)
        assert segment_rms(y, 8).size == 6
        assert segment_rms(y, 8, both_ends=True).size == 12
        assert segment_rms(y[:48], 8, both_ends=True).size == 6


class TestDfa:
    def test_white_noise(self):
        hs = [dfa(np.random.default_rng(s).standard_normal(2 ** 14))[0] for s in range(20)]
        assert np.mean(hs) == pytest.approx(0.5, abs=0.05)

    def test_fgn(self):
        hs = [dfa(gen_fgn(0.8, 2 ** 14, s))[0] for s in range(20)]
        assert np.mean(hs) == pytest.approx(0.8, abs=0.05)

    def test_fbm(self):
        hs = [dfa(gen_fbm(0.3, 2 ** 14, s))[0] for s in range(20)]
        assert np.mean(hs) == pytest.approx(1.3, abs=0.1)

    @given(noise, st.floats(0.01, 100) | st.floats(-100, -0.01), st.floats(-1e3, 1e3))
    def test_affine_invariance(self, x, a, b):
        if not rough(x):
            return
        try:
            h0 = dfa(x, SMALL_GRID)[0]
        except FractalisError:
            return
        assert abs(dfa(a * x + b, SMALL_GRID)[0] - h0) < 1e-9

    def test_reversal(self):
        # the reversed profile is the negated profile shifted by one sample
        x = gen_fgn(0.6, 2 ** 14, seed=1).samples
        y, yr = profile(x), profile(x[::-1])
        np.testing.assert_allclose(yr[:-1], -y[-2::-1], atol=1e-9)
        for s in range(10):
            x = gen_fgn(0.6, 2 ** 14, seed=s).samples
            assert abs(dfa(x)[0] - dfa(x[::-1])[0]) < 0.05


class TestMfdfa:
    @given(noise)
    def test_q2_equals_dfa(self, x):
        if not rough(x):
            return
        qs = QGrid((-2.0, 0.0, 2.0, 4.0))
        try:
            h, F, _ = dfa(x, SMALL_GRID)
        except FractalisError:
            return
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FloorWarning)
            field = mfdfa(x, SMALL_GRID, qs)
        assert abs(field.H[2] - h) < 1e-12
        np.testing.assert_allclose(field.column(2.0), F, rtol=1e-12)

    @given(noise)
    def test_power_mean_monotone(self, x):
        if not rough(x):
            return
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FloorWarning)
            try:
                field = mfdfa(x, SMALL_GRID, QGrid.linear(-5, 5, 11))
            except FractalisError:
                return
        assert np.all(np.diff(field.F, axis=0) >= -1e-12 * field.F[1:])

    def test_q0_log_average(self):
        x = gen_fgn(0.5, 1024, seed=4).samples
        field = mfdfa(x, SMALL_GRID, QGrid((0.0, 2.0)))
        var = segment_rms(profile(x), 8) ** 2
        assert field.F[0, 1] == pytest.approx(math.exp(0.5 * np.mean(np.log(var))), rel=1e-12)

    def test_moment_formula(self):
        x = gen_fgn(0.5, 1024, seed=4).samples
        f = segment_rms(profile(x), 16)
        field = mfdfa(x, SMALL_GRID, QGrid((-3.0, 3.0)))
        for i, q in enumerate((-3.0, 3.0)):
            assert field.F[i, 2] == pytest.approx(np.mean(f ** q) ** (1 / q), rel=1e-10)

    def test_floor_flagged(self):
        x = np.random.default_rng(0).standard_normal(512)
        x[:64] = 0.3  # constant stretch: its profile is a straight line
        with pytest.warns(FloorWarning):
            field = mfdfa(x, SMALL_GRID, QGrid((-2.0, 2.0)))
        assert field.floored
        assert np.all(np.isfinite(field.H))

    def test_monofractal_flat(self):
        f = mfdfa(gen_fgn(0.7, 2 ** 14, seed=0))
        assert np.ptp(f.H) < 0.1

    def test_cascade_decreasing(self):
        f = mfdfa(gen_binomial_cascade(0.75, 16, seed=0), DYADIC)
        assert np.all(np.diff(f.H) < 0)
        assert np.ptp(f.H) > 0.3

    @pytest.mark.parametrize("make", [lambda: gen_binomial_cascade(0.75, 16, 0),
                                      lambda: gen_fgn(0.7, 2 ** 14, 0)])
    def test_t_concave(self, make):
        t = mass_exponents(mfdfa(make(), DYADIC)).t
        assert np.diff(t, 2).max() <= 1e-6 + 0.02


class TestSpectrum:
    def test_t_at_two(self):
        field = mfdfa(gen_fgn(0.5, 4096, 0), qs=QGrid((1.0, 2.0)))
        t = mass_exponents(field).t
        assert t[1] == pytest.approx(2 * field.H[1] - 1)

    def test_monofractal_algebra(self):
        q = np.linspace(-5, 5, 16)
        sp = spectrum(q, q * 0.37 - 1.0)
        np.testing.assert_allclose(sp.h, 0.37)
        np.testing.assert_allclose(sp.D, 1.0)
        assert sp.h.size == 15 and sp.D.size == 15
        assert sp.width == pytest.approx(0.0, abs=1e-12)

    def test_duplicate_q(self):
        with pytest.raises(FractalisError, match="duplicate q values"):
            spectrum([1.0, 1.0, 2.0], [0.0, 0.0, 1.0])

    def test_analytic_cascade_single_hump(self):
        q = np.linspace(-5, 5, 16)
        sp = spectrum(q, cascade_mass_exponent(0.75, q))
        peak = int(np.argmax(sp.D))
        assert np.all(np.diff(sp.D[:peak + 1]) > 0) and np.all(np.diff(sp.D[peak:]) < 0)
        assert sp.D.max() == pytest.approx(1.0, abs=0.05)

    def test_estimated_cascade_single_hump(self):
        sp = spectrum(mfdfa(gen_binomial_cascade(0.75, 16, seed=0), DYADIC))
        peak = int(np.argmax(sp.D))
        assert np.all(np.diff(sp.D[:peak + 1]) > 0) and np.all(np.diff(sp.D[peak:]) < 0)
        assert sp.D.max() == pytest.approx(1.0, abs=0.1)


class TestCharacterize:
    def test_fgn(self):
        c = characterize(gen_fgn(0.3, 2 ** 14, 1))
        assert c.kind == "fGn" and c.hurst == pytest.approx(0.3, abs=0.1)

    def test_fbm(self):
        c = characterize(gen_fbm(0.3, 2 ** 14, 1))
        assert c.kind == "fBm" and c.hurst == pytest.approx(0.3, abs=0.1)
        assert c.dfa_exponent == pytest.approx(c.hurst + 1)

    def test_boundary_is_fgn(self, monkeypatch):
        monkeypatch.setattr(fl, "dfa", lambda x, grid=None: (1.0, None, None))
        c = characterize(np.random.default_rng(0).standard_normal(1024))
        assert c.kind == "fGn" and c.hurst == 1.0

    def test_short(self):
        with pytest.raises(FractalisError):
            characterize(np.random.default_rng(0).standard_normal(500))
