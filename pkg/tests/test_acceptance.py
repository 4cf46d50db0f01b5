"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line in ``RESULTS`` before asserting;
the lines are printed in the terminal summary (see ``conftest.py``) and when
the module is run directly.
"""

import time
import warnings

import numpy as np
import pytest

from fractalis.cli import run
from fractalis.dsp import BANDS, design_butterworth_bandpass, filter_band, psd_bin_edges, welch_psd
from fractalis.core import TimeSeries, window_split
from fractalis.features import (extract_hfd_features, extract_mfd_features,
                                extract_mfdfa_features, extract_psd_features, extract_trials)
from fractalis.fluctuation import (DEFAULT_QS, FloorWarning, QGrid, ScaleGrid, characterize, dfa,
                                   mass_exponents, mfdfa, spectrum)
from fractalis.io import write_trial
from fractalis.mlpipe import cross_validate
from fractalis.morphofd import fractal_dimension_global, fractogram, multiscale_cover
from fractalis.stationarity import adf_test
from fractalis.synth import (cascade_mass_exponent, gen_binomial_cascade, gen_fbm, gen_fgn,
                             gen_weierstrass, gen_white_noise, synthetic_trials)

RESULTS = {}
SEEDS = range(20)


def report(num, name, ok, detail):
    RESULTS[num] = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {name}: {detail}"
    print(RESULTS[num])
    assert ok, RESULTS[num]


def test_01_hurst_recovery():
    t0 = time.perf_counter()
    worst_mean = worst_seed = 0.0
    parts = []
    for h in (0.3, 0.5, 0.7, 0.9):
        est = np.array([dfa(gen_fgn(h, 2 ** 14, s))[0] for s in SEEDS])
        worst_mean = max(worst_mean, abs(est.mean() - h))
        worst_seed = max(worst_seed, np.abs(est - h).max())
        parts.append(f"H={h}:{est.mean():.3f}")
    elapsed = time.perf_counter() - t0
    ok = worst_mean <= 0.05 and worst_seed <= 0.12 and elapsed < 10.0
    report(1, "DFA Hurst recovery", ok,
           f"{' '.join(parts)} |mean err|<={worst_mean:.3f} |seed err|<={worst_seed:.3f} "
           f"time={elapsed:.1f}s")


def test_02_fgn_fbm_characterization():
    fgn = [characterize(gen_fgn(0.3, 2 ** 14, s)) for s in SEEDS]
    fbm = [characterize(gen_fbm(0.3, 2 ** 14, s)) for s in SEEDS]
    n_fgn = sum(c.kind == "fGn" and abs(c.hurst - 0.3) <= 0.1 for c in fgn)
    n_fbm = sum(c.kind == "fBm" and abs(c.hurst - 0.3) <= 0.1 for c in fbm)
    report(2, "fGn/fBm characterization", n_fgn == 20 and n_fbm == 20,
           f"fGn {n_fgn}/20, fBm {n_fbm}/20")


def test_03_mfdfa_reduces_to_dfa():
    rng = np.random.default_rng(0)
    inputs = [gen_fgn(0.3, 4096, 1), gen_fbm(0.7, 4096, 2), gen_white_noise(4096, 3),
              gen_binomial_cascade(0.75, 12, 4), gen_weierstrass(1.5, 5.0, 4096),
              rng.standard_normal(2048) ** 3, np.sin(np.arange(2048.0)) + rng.standard_normal(2048)]
    grids = [None, ScaleGrid((16, 32, 64, 128, 256)), ScaleGrid.log_spaced(10, 200, 7)]
    worst = 0.0
    for x in inputs:
        for grid in grids:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", FloorWarning)
                field = mfdfa(x, grid, QGrid((-3.0, 0.0, 2.0, 5.0)))
            worst = max(worst, abs(field.H[2] - dfa(x, grid)[0]))
    report(3, "MFDFA q=2 equals DFA", worst < 1e-12, f"max |dH|={worst:.2e} over 21 cases")


def test_04_multifractal_oracle():
    t0 = time.perf_counter()
    dyadic = ScaleGrid(tuple(2 ** k for k in range(4, 12)))
    q = np.asarray(DEFAULT_QS.qs)
    tau = cascade_mass_exponent(0.75, q)
    t = np.array([mass_exponents(mfdfa(gen_binomial_cascade(0.75, 16, s), dyadic)).t
                  for s in SEEDS])
    err = np.abs(t.mean(axis=0) - tau).max()
    single = np.abs(t - tau).max(axis=1)
    widths = [spectrum(mfdfa(gen_fgn(0.7, 2 ** 14, s))).width for s in SEEDS]
    elapsed = time.perf_counter() - t0
    ok = err < 0.1 and max(widths) < 0.15 and elapsed < 30.0
    report(4, "multifractal oracle", ok,
           f"cascade 20-seed mean max|t-tau|={err:.3f} (single seeds median "
           f"{np.median(single):.2f}, max {single.max():.2f}); fGn(0.7) width max "
           f"{max(widths):.3f}; time={elapsed:.1f}s")


def test_05_mfd_oracle():
    est = {d: fractal_dimension_global(
        multiscale_cover(gen_weierstrass(d, 5.0, 2 ** 16, 32768.0), 500), (50, 500))
        for d in (1.2, 1.5, 1.8)}
    ramp = fractal_dimension_global(multiscale_cover(np.arange(7680.0), 30))
    mins = []
    for s in range(5):
        fg = fractogram(gen_fgn(0.1, 1920, s), 274)
        mid = (fg.scales >= 67) & (fg.scales <= 201)
        mins.append(fg.D[mid].min())
    ok = (all(abs(v - d) <= 0.1 for d, v in est.items()) and abs(ramp - 1.0) <= 0.05
          and min(mins) > 1.5)
    report(5, "MFD oracle", ok,
           " ".join(f"W(D={d})={v:.3f}" for d, v in est.items())
           + f" ramp={ramp:.3f} fGn(0.1) mid-scale min D={min(mins):.3f}")


def test_06_feature_shapes():
    x = gen_fgn(0.5, 60 * 128, 0, 128.0)
    dims = (len(extract_mfd_features(x)), len(extract_mfdfa_features(x)),
            len(extract_hfd_features(x)), len(extract_psd_features(x)))
    windows = len(window_split(x, 15.0, 0.5))
    report(6, "feature shapes", dims == (90, 30, 7, 64) and windows == 7,
           f"mfd/mfdfa/hfd/psd = {dims}, windows={windows}")


def test_07_dsp_conformance():
    rate = 128.0
    edge_err = 0.0
    for name in ("alpha", "beta", "gamma"):
        b = BANDS[name]
        g = design_butterworth_bandpass(b.lo_hz, b.hi_hz, rate).gain_db([b.lo_hz, b.hi_hz], rate)
        edge_err = max(edge_err, np.abs(g + 3.0).max())
    t = np.arange(60 * 128) / rate
    x = np.sin(2 * np.pi * 10.0 * t)
    y = filter_band(TimeSeries(x, rate), "alpha").samples
    lags = np.arange(-32, 33)
    xc = [np.dot(x[1000 + k:-1000 + k], y[1000:-1000]) for k in lags]
    peak = int(lags[np.argmax(xc)])
    noise = gen_fgn(0.6, 2 ** 14, 1, rate)
    power = np.sum(welch_psd(noise) * np.diff(psd_bin_edges(rate)))
    parseval = abs(power / np.mean(noise.samples ** 2) - 1.0)
    ok = edge_err <= 0.2 and peak == 0 and parseval <= 0.05
    report(7, "DSP conformance", ok,
           f"max |edge gain + 3 dB|={edge_err:.3f}, xcorr peak lag={peak}, "
           f"Parseval rel err={parseval:.4f}")


def test_08_adf_calibration():
    rej = np.mean([adf_test(np.random.default_rng(s).standard_normal(2000)).reject_unit_root_at_5pct
                   for s in range(100)])
    keep = np.mean([not adf_test(np.cumsum(np.random.default_rng(s).standard_normal(2000)))
                    .reject_unit_root_at_5pct for s in range(100)])
    report(8, "ADF calibration", rej >= 0.95 and keep >= 0.90,
           f"white-noise rejection {rej:.2f}, random-walk non-rejection {keep:.2f}")


def test_09_end_to_end():
    t0 = time.perf_counter()
    acc = {}
    for shuffled in (False, True):
        trials = synthetic_trials(16, 20, ("F3", "F4"), 0.3, 0.8, seed=0, shuffle_labels=shuffled)
        _, X = extract_trials(trials, "mfdfa", "raw", "F3,F4")
        ratings = [t.labels["arousal"] for t in trials]
        subjects = [t.subject_id for t in trials]
        for protocol in ("dependent", "independent"):
            acc[shuffled, protocol] = cross_validate(X, ratings, subjects, protocol).mean_accuracy
    elapsed = time.perf_counter() - t0
    ok = (acc[False, "dependent"] > 0.9 and acc[False, "independent"] > 0.9
          and all(abs(acc[True, p] - 0.5) <= 0.1 for p in ("dependent", "independent"))
          and elapsed < 300.0)
    report(9, "end-to-end pipeline", ok,
           f"dependent={acc[False, 'dependent']:.3f} independent={acc[False, 'independent']:.3f} "
           f"shuffled={acc[True, 'dependent']:.3f}/{acc[True, 'independent']:.3f} "
           f"time={elapsed:.1f}s")


def test_10_determinism(tmp_path):
    dirs = []
    for name in ("trials_a", "trials_b"):
        d = tmp_path / name
        d.mkdir()
        for i, t in enumerate(synthetic_trials(6, 10, ("F3", "F4"), seed=7)):
            write_trial(d / f"t{i:03d}.csv", t)
        dirs.append(d)
    trial_bytes = all((dirs[0] / p.name).read_bytes() == p.read_bytes() for p in dirs[1].glob("*.csv"))
    outs = [tmp_path / "out_a", tmp_path / "out_b"]
    for out in outs:
        assert run(["pipeline", "--in", str(dirs[0]), "--family", "mfdfa", "--channels", "F3,F4",
                    "--seed", "3", "--out-dir", str(out)]) == 0
    same = [(outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
            for n in ("features.csv", "report.csv")]
    report(10, "determinism", all(same) and trial_bytes,
           f"features.csv identical={same[0]}, report.csv identical={same[1]}, "
           f"regenerated trial files identical={trial_bytes}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
