"""Command-line entry point: ``fractalis <subcommand> [flags]``.

Exit status is 0 on success, 1 on a usage error and 2 on a data or
numerical error. Every output is a CSV whose ``#`` header echoes the fully
resolved configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import FractalisError, TimeSeries, window_bounds
from .dsp import BANDS, filter_band, psd_bin_edges, welch_psd
from .features import FAMILIES, channel_set, extract_trials, n_threads
from .fluctuation import (QGrid, ScaleGrid, characterize, default_scale_grid, dfa,
                          mass_exponents, mfdfa, spectrum)
from .io import (FORMAT_NOTE, read_features, read_series, read_trial, read_trial_dir,
                 write_features, write_series, write_table, write_trial)
from .mlpipe import cross_validate
from .morphofd import fractogram, higuchi_fd
from .stationarity import rolling_adf
from .synth import KINDS, GeneratorSpec

# options whose values may legitimately start with "-"
_NEGATIVE_OK = ("--q", "--scales")
# destinations left out of the echoed configuration so reruns elsewhere match byte for byte
_OUTPUT_KEYS = ("out", "out_dir")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_range(text: str, integer: bool = False):
    """``lo:hi:n`` (linear), ``lo:hi:nlog`` (log-spaced) or a comma list."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            log = n.endswith("log")
            n = int(n[:-3] if log else n)
            lo, hi = float(lo), float(hi)
            if n < 2 or hi <= lo or (log and lo <= 0):
                raise UsageError(f"degenerate grid {text!r}")
            vals = np.geomspace(lo, hi, n) if log else np.linspace(lo, hi, n)
        else:
            vals = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}") from None
    if integer:
        return tuple(sorted(set(np.rint(vals).astype(int).tolist())))
    return tuple(vals.tolist())


def _common(p):
    p.add_argument("--config", help="key=value defaults file")
    p.add_argument("--seed", type=int, default=0)


def _io(p, out_required=True, channel=True):
    p.add_argument("--in", dest="inp", required=True, help="input CSV")
    if channel:
        p.add_argument("--channel", help="column to analyse (default: first)")
    p.add_argument("--out", required=out_required)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fractalis", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic fractal signal")
    _common(p)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--hurst", type=float, default=0.5)
    p.add_argument("--dimension", type=float, default=1.5)
    p.add_argument("--gamma", type=float, default=5.0)
    p.add_argument("--p", type=float, default=0.75)
    p.add_argument("--n", type=int, default=16384)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--samples-per-unit", type=float, default=1024.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bands", help="band-filter every channel of a trial")
    _common(p)
    _io(p, channel=False)
    p.add_argument("--band", choices=sorted(BANDS), required=True)

    p = sub.add_parser("psd", help="64-bin Welch spectrum")
    _common(p)
    _io(p)

    p = sub.add_parser("mfd", help="fractogram (scales x windows)")
    _common(p)
    _io(p)
    p.add_argument("--max-scale", type=int, default=274)
    p.add_argument("--slope-window", type=int, default=7)
    p.add_argument("--window-s", type=float, default=15.0)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--flat-as-one", action="store_true")

    p = sub.add_parser("hfd", help="Higuchi dimension per window")
    _common(p)
    _io(p)
    p.add_argument("--k-max", type=int, default=32)
    p.add_argument("--window-s", type=float, default=15.0)
    p.add_argument("--overlap", type=float, default=0.5)

    p = sub.add_parser("dfa", help="DFA exponent and fGn/fBm characterisation")
    _common(p)
    _io(p, out_required=False)
    p.add_argument("--scales", help="scale grid, e.g. 30:500:10log")
    p.add_argument("--both-ends", action="store_true")

    p = sub.add_parser("mfdfa", help="MFDFA exponents and multifractal spectrum")
    _common(p)
    _io(p)
    p.add_argument("--scales", default="30:500:10log")
    p.add_argument("--q", default="-5:5:16")
    p.add_argument("--fraction", type=float, default=1.0, help="trailing fraction analysed")
    p.add_argument("--both-ends", action="store_true")

    p = sub.add_parser("adf", help="(rolling) augmented Dickey-Fuller test")
    _common(p)
    _io(p)
    p.add_argument("--window", type=int, help="window in samples (default: whole signal)")
    p.add_argument("--hop", type=int)
    p.add_argument("--max-lags", default="auto")

    def feature_flags(p):
        p.add_argument("--family", choices=sorted(FAMILIES), required=True)
        p.add_argument("--band", choices=sorted(BANDS), default="raw")
        p.add_argument("--channels", default="left", help="left, right or a comma list")
        p.add_argument("--label", choices=("valence", "arousal"), default="arousal")

    def classify_flags(p):
        p.add_argument("--protocol", default="dependent",
                       choices=("dependent", "independent", "subject_dependent",
                                "subject_independent"))
        p.add_argument("--C", dest="C", type=float, default=1.0)
        p.add_argument("--gamma", default="scale")
        p.add_argument("--folds", type=int, default=5)

    p = sub.add_parser("features", help="feature matrix from a trial directory")
    _common(p)
    p.add_argument("--in", dest="inp", required=True, help="trial directory")
    p.add_argument("--out", required=True)
    feature_flags(p)

    p = sub.add_parser("classify", help="cross-validated SVM accuracy")
    _common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--label", choices=("valence", "arousal"))
    p.add_argument("--out", required=True)
    classify_flags(p)

    p = sub.add_parser("pipeline", help="features then classify over a trial directory")
    _common(p)
    p.add_argument("--in", dest="inp", required=True, help="trial directory")
    p.add_argument("--out-dir", required=True)
    feature_flags(p)
    classify_flags(p)
    return parser


def _fix_negative_values(argv):
    out, it = [], iter(argv)
    for tok in it:
        if tok in _NEGATIVE_OK:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such config file: {p}")
    cfg = {}
    for n, line in enumerate(p.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{p}:{n}: expected key=value")
        k, v = line.split("=", 1)
        cfg[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    return cfg


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv):
    argv = _fix_negative_values(list(argv))
    parser = build_parser()
    cfg_path = _config_path(argv)
    command = next((t for t in argv if not t.startswith("-")), None)
    subparsers = parser._subparsers._group_actions[0].choices
    if cfg_path is not None and command in subparsers:
        cfg = load_config(cfg_path)
        subparser = subparsers[command]
        known = {a.dest for a in subparser._actions}
        unknown = set(cfg) - known
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        for a in subparser._actions:
            if a.dest not in cfg:
                continue
            if isinstance(a, argparse._StoreTrueAction):
                cfg[a.dest] = cfg[a.dest].lower() in ("1", "true", "yes")
            elif a.type is not None:
                try:
                    cfg[a.dest] = a.type(cfg[a.dest])
                except ValueError:
                    raise UsageError(f"config key {a.dest}: bad value {cfg[a.dest]!r}") from None
            if a.choices is not None and cfg[a.dest] not in a.choices:
                raise UsageError(f"config key {a.dest}: {cfg[a.dest]!r} not in {list(a.choices)}")
            a.required = False
        subparser.set_defaults(**cfg)
    return parser.parse_args(argv)


def _meta(args) -> dict:
    d = {"fractalis": __version__, "format": FORMAT_NOTE}
    d.update({k: v for k, v in sorted(vars(args).items())
              if v is not None and k not in _OUTPUT_KEYS})
    return d


def cmd_synth(args):
    params = {"hurst": args.hurst, "dimension": args.dimension, "gamma": args.gamma,
              "p": args.p, "rate_hz": args.rate, "samples_per_unit": args.samples_per_unit}
    ts = GeneratorSpec(args.kind, args.n, args.seed, params).generate()
    write_series(args.out, ts, "x", _meta(args))


def cmd_bands(args):
    trial = read_trial(args.inp)
    chans = {c: filter_band(ts, args.band) for c, ts in trial.channels.items()}
    write_trial(args.out, type(trial)(chans, trial.subject_id, trial.labels))


def cmd_psd(args):
    ts = read_series(args.inp, args.channel)
    psd = welch_psd(ts)
    edges = psd_bin_edges(ts.rate_hz, psd.size)
    centers = np.arange(psd.size) * ts.rate_hz / 2.0 / psd.size
    write_table(args.out, ["freq_hz", "psd", "bin_lo_hz", "bin_hi_hz"],
                zip(centers, psd, edges[:-1], edges[1:]), _meta(args))


def cmd_mfd(args):
    ts = read_series(args.inp, args.channel)
    window = int(round(args.window_s * ts.rate_hz))
    hop = max(1, int(round(window * (1.0 - args.overlap))))
    fg = fractogram(ts, args.max_scale, args.slope_window, window=window, hop=hop,
                    flat_as_one=args.flat_as_one)
    cols = ["scale"] + [f"t{t}" for t in fg.times]
    write_table(args.out, cols, (np.concatenate([[s], row]) for s, row in zip(fg.scales, fg.D)),
                _meta(args))
    print(f"mean_D={float(fg.D.mean())!r}")


def cmd_hfd(args):
    ts = read_series(args.inp, args.channel)
    window = int(round(args.window_s * ts.rate_hz))
    hop = max(1, int(round(window * (1.0 - args.overlap))))
    starts = window_bounds(len(ts), window, hop)
    vals = [higuchi_fd(ts.samples[s:s + window], args.k_max) for s in starts]
    write_table(args.out, ["window_start", "hfd"], zip(starts, vals), _meta(args))


def cmd_dfa(args):
    grid = ScaleGrid(parse_range(args.scales, integer=True)) if args.scales else None
    ts = read_series(args.inp, args.channel)
    H, F, fit = dfa(ts, grid, both_ends=args.both_ends)
    print(f"H={H!r}")
    if len(ts) >= 512:
        c = characterize(ts, grid)
        print(f"class={c.kind} hurst={c.hurst!r}")
    if args.out:
        scales = (grid or default_scale_grid(len(ts))).scales
        write_table(args.out, ["scale", "F"], zip(scales, F),
                    {**_meta(args), "H": H, "r_squared": fit.r_squared})


def cmd_mfdfa(args):
    grid = ScaleGrid(parse_range(args.scales, integer=True))
    qs = QGrid(parse_range(args.q))
    if len(qs) < 2:
        raise UsageError("need at least 2 q values")
    if not 0.0 < args.fraction <= 1.0:
        raise UsageError("--fraction must lie in (0, 1]")
    ts = read_series(args.inp, args.channel)
    keep = int(round(args.fraction * len(ts)))
    ts = TimeSeries(ts.samples[len(ts) - keep:], ts.rate_hz)
    field = mfdfa(ts, grid, qs, both_ends=args.both_ends)
    sp = spectrum(field, mass_exponents(field).t)
    h = np.append(sp.h, np.nan)
    D = np.append(sp.D, np.nan)
    write_table(args.out, ["q", "H", "t", "h", "D"], zip(sp.qs, field.H, sp.t, h, D),
                {**_meta(args), "width": sp.width})
    print(f"width={sp.width!r}")


def cmd_adf(args):
    ts = read_series(args.inp, args.channel)
    window = args.window or len(ts)
    hop = args.hop or window
    max_lags = args.max_lags if args.max_lags == "auto" else int(args.max_lags)
    res = rolling_adf(ts, window, hop, max_lags)
    starts = window_bounds(len(ts), window, hop)
    rows = ((s, r.statistic, r.lags_used, r.nobs, r.critical_values["1%"],
             r.critical_values["5%"], r.critical_values["10%"], r.reject_unit_root_at_5pct)
            for s, r in zip(starts, res))
    write_table(args.out, ["start", "statistic", "lags_used", "nobs", "cv_1pct", "cv_5pct",
                           "cv_10pct", "reject_5pct"], rows, _meta(args))
    print(f"rejected={sum(r.reject_unit_root_at_5pct for r in res)}/{len(res)}")


def _features(args, out):
    files, trials = read_trial_dir(args.inp)
    names, X = extract_trials(trials, args.family, args.band, channel_set(args.channels),
                              n_jobs=n_threads())
    missing = [f for f, t in zip(files, trials) if args.label not in t.labels]
    if missing:
        raise FractalisError(f"trial(s) without a {args.label} rating: {', '.join(missing[:3])}")
    labels = [t.labels[args.label] for t in trials]
    write_features(out, names, X, [t.subject_id for t in trials], labels, _meta(args))


def cmd_features(args):
    _features(args, args.out)


def _classify(args, features_path, out, label):
    meta, _, X, y, subjects = read_features(features_path)
    if label is not None and meta.get("label", label) != label:
        raise FractalisError(
            f"{features_path} holds {meta['label']} ratings, not {label}")
    label = label or meta.get("label", "label")
    rep = cross_validate(X, y, subjects, args.protocol, label, args.folds, args.C,
                         args.gamma if args.gamma == "scale" else float(args.gamma), args.seed)
    rows = [(i, a) for i, a in enumerate(rep.fold_accuracies)]
    write_table(out, ["fold", "accuracy"], rows,
                {**_meta(args), "protocol": rep.protocol, "mean_accuracy": rep.mean_accuracy})
    print(f"protocol={rep.protocol} label={label} mean_accuracy={rep.mean_accuracy!r}")


def cmd_classify(args):
    _classify(args, args.features, args.out, args.label)


def cmd_pipeline(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _features(args, out / "features.csv")
    _classify(args, out / "features.csv", out / "report.csv", args.label)


COMMANDS = {
    "synth": cmd_synth, "bands": cmd_bands, "psd": cmd_psd, "mfd": cmd_mfd, "hfd": cmd_hfd,
    "dfa": cmd_dfa, "mfdfa": cmd_mfdfa, "adf": cmd_adf, "features": cmd_features,
    "classify": cmd_classify, "pipeline": cmd_pipeline,
}


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (FractalisError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
