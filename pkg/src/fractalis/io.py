"""Plain-text CSV formats.

Every file starts with ``#`` metadata lines holding whitespace-separated
``key=value`` tokens, followed by a header row of column names and the
numeric rows. Floats are written in the shortest round-trip form
(``repr``). A trial file is the special case whose single metadata line
carries ``rate_hz``, ``subject`` and the ratings, and whose columns are
channels.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import FractalisError, TimeSeries, Trial

FORMAT_NOTE = "floats=shortest-roundtrip"


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        return repr(f)
    return str(v)


def _meta_token(key, value) -> str:
    text = fmt(value) if not isinstance(value, (list, tuple)) else ",".join(fmt(v) for v in value)
    if any(c.isspace() for c in text):
        raise FractalisError(f"metadata value for {key!r} contains whitespace")
    return f"{key}={text}"


def write_table(path, columns: Sequence[str], rows: Iterable[Sequence], meta: Mapping | None = None,
                meta_inline: bool = False):
    """Write a metadata-headed CSV table."""
    lines = []
    if meta:
        tokens = [_meta_token(k, v) for k, v in meta.items() if v is not None]
        if meta_inline:
            lines.append("# " + " ".join(tokens))
        else:
            lines.extend("# " + t for t in tokens)
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise FractalisError("row length does not match header")
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def parse_meta(line: str) -> dict:
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


def read_table(path) -> tuple[dict, list[str], list[list[str]]]:
    """Return ``(meta, columns, rows)`` with rows as raw strings."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    meta: dict = {}
    header = None
    rows = []
    with p.open(newline="") as fh:
        for line in fh:
            if header is None and line.startswith("#"):
                meta.update(parse_meta(line))
                continue
            if not line.strip():
                continue
            if header is None:
                header = next(csv.reader([line]))
                header = [h.strip() for h in header]
            else:
                rows.append([c.strip() for c in next(csv.reader([line]))])
    if header is None:
        raise FractalisError(f"{p}: missing header row")
    return meta, header, rows


def read_numeric(path) -> tuple[dict, list[str], np.ndarray]:
    meta, cols, rows = read_table(path)
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise FractalisError(f"{path}: non-numeric value ({exc})") from None
    if data.size == 0:
        data = data.reshape(0, len(cols))
    if data.shape[1] != len(cols):
        raise FractalisError(f"{path}: ragged rows")
    return meta, cols, data


def read_series(path, channel: str | None = None) -> TimeSeries:
    """One column (``channel`` or the first) of a table as a TimeSeries."""
    meta, cols, data = read_numeric(path)
    if channel is None:
        j = 0
    elif channel in cols:
        j = cols.index(channel)
    else:
        raise FractalisError(f"{path}: no column {channel!r} (have {', '.join(cols)})")
    return TimeSeries(data[:, j], float(meta.get("rate_hz", 1.0)))


def write_series(path, ts: TimeSeries, name: str = "x", meta: Mapping | None = None):
    m = {"rate_hz": ts.rate_hz, **(meta or {})}
    write_table(path, [name], ([v] for v in ts.samples), m)


def read_trial(path) -> Trial:
    meta, cols, data = read_numeric(path)
    if "rate_hz" not in meta:
        raise FractalisError(f"{path}: trial header lacks rate_hz")
    rate = float(meta["rate_hz"])
    labels = {k: float(meta[k]) for k in ("valence", "arousal") if k in meta}
    chans = {c: TimeSeries(data[:, j], rate) for j, c in enumerate(cols)}
    return Trial(chans, meta.get("subject", Path(path).stem), labels)


def write_trial(path, trial: Trial):
    meta = {"rate_hz": trial.rate_hz, "subject": trial.subject_id, **trial.labels}
    cols = trial.channel_names
    data = np.column_stack([trial.channels[c].samples for c in cols])
    write_table(path, cols, data.tolist(), meta, meta_inline=True)


def read_trial_dir(directory) -> tuple[list[str], list[Trial]]:
    """All ``*.csv`` trials of a directory, sorted by file name."""
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"no such directory: {d}")
    paths = sorted(d.glob("*.csv"))
    if not paths:
        raise FractalisError(f"{d}: no trial files")
    return [p.name for p in paths], [read_trial(p) for p in paths]


def write_features(path, names: Sequence[str], X: np.ndarray, subjects: Sequence,
                   labels: Sequence[float], meta: Mapping | None = None):
    """Feature matrix: ``subject``, the feature columns, then a trailing ``label``."""
    cols = ["subject", *names, "label"]
    rows = ([s, *x, lab] for s, x, lab in zip(subjects, np.asarray(X).tolist(), labels))
    write_table(path, cols, rows, meta)


def read_features(path) -> tuple[dict, list[str], np.ndarray, np.ndarray, np.ndarray]:
    meta, cols, rows = read_table(path)
    if len(cols) < 3 or cols[0] != "subject" or cols[-1] != "label":
        raise FractalisError(f"{path}: expected columns subject, <features...>, label")
    try:
        X = np.array([[float(c) for c in r[1:-1]] for r in rows], dtype=float)
        y = np.array([float(r[-1]) for r in rows])
    except ValueError as exc:
        raise FractalisError(f"{path}: non-numeric value ({exc})") from None
    subjects = np.array([r[0] for r in rows])
    return meta, cols[1:-1], X, y, subjects
