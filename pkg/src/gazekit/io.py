"""File formats: recording tables, label files, velocity-trace tables, and
TOML configuration loading. All text formats are UTF-8, '.' decimal
separator, lossless at 9 significant digits."""
from __future__ import annotations

import csv
import io as _io
try:
    import tomllib
except ModuleNotFoundError:          # Python < 3.11
    import tomli as tomllib
from dataclasses import fields as dc_fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .cleaning import CleaningConfig
from .core import GazeClass, LabelSequence, Recording, events_from_labels
from .metrics import ElcConfig
from .signal import FilterConfig, VelocityTrace
from .synth import ScenarioConfig

RECORDING_COLUMNS = ["t_s", "eye_x", "eye_y", "eye_z",
                     "head_qw", "head_qx", "head_qy", "head_qz", "confidence"]
TRACE_COLUMNS = ["t_s", "eye_abs", "head_abs", "eye_az", "head_az",
                 "eye_el", "head_el", "valid"]

CLASS_NAMES = {
    int(GazeClass.NONE): "none",
    int(GazeClass.FIXATION_STATIONARY): "fixation_stationary",
    int(GazeClass.FIXATION_TRANSLATION): "fixation_translation",
    int(GazeClass.PURSUIT): "pursuit",
    int(GazeClass.SACCADE): "saccade",
}
CLASS_IDS = {v: k for k, v in CLASS_NAMES.items()}
COLLAPSED_NAMES = {0: "none", 1: "fixation", 2: "pursuit", 3: "saccade"}
COLLAPSED_IDS = {v: k for k, v in COLLAPSED_NAMES.items()}


class FormatError(ValueError):
    """Malformed input file; carries the offending line when known."""

    def __init__(self, message, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def _fmt(x: float) -> str:
    return format(x, ".9g")


# ---------------------------------------------------------------------------
# recordings

def write_recording(rec: Recording, path, rate_hz: Optional[float] = None):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORDING_COLUMNS + [f"rate_hz={_fmt(rate_hz or rec.rate_hz)}"])
        for i in range(len(rec)):
            w.writerow([_fmt(rec.t[i])] + [_fmt(v) for v in rec.eye_dir[i]]
                       + [_fmt(v) for v in rec.head_rot[i]]
                       + [_fmt(rec.confidence[i])])


def read_recording(path) -> Recording:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty recording file")
        if header[:len(RECORDING_COLUMNS)] != RECORDING_COLUMNS:
            raise FormatError("unexpected header row", line=1)
        rate = None
        for extra in header[len(RECORDING_COLUMNS):]:
            if extra.startswith("rate_hz="):
                rate = float(extra.split("=", 1)[1])
        if rate is None:
            raise FormatError("missing rate_hz in header", line=1)
        rows = []
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RECORDING_COLUMNS):
                raise FormatError(
                    f"expected {len(RECORDING_COLUMNS)} fields, got {len(row)}", line=ln)
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise FormatError(str(exc), line=ln) from None
    if not rows:
        raise FormatError("recording has no samples")
    data = np.asarray(rows)
    return Recording(data[:, 0], data[:, 1:4], data[:, 4:8], data[:, 8], rate)


# ---------------------------------------------------------------------------
# labels

def serialize_labels(labels, names: Dict[int, str] = CLASS_NAMES) -> str:
    """Canonical label-file text: sorted non-overlapping event rows. The
    header carries the taxonomy so id/name mappings never get confused."""
    scheme = "collapsed" if names is COLLAPSED_NAMES else "five"
    buf = _io.StringIO()
    buf.write(f"start_idx,end_idx,class_name,scheme={scheme}\n")
    for ev in events_from_labels(labels):
        buf.write(f"{ev.start_idx},{ev.end_idx},{names[ev.cls]}\n")
    return buf.getvalue()


def write_labels(labels, path, names: Dict[int, str] = CLASS_NAMES):
    Path(path).write_text(serialize_labels(labels, names), encoding="utf-8")


def parse_labels(text: str, n: Optional[int] = None,
                 ids: Optional[Dict[str, int]] = None) -> LabelSequence:
    lines = text.splitlines()
    header = lines[0].strip().split(",") if lines else []
    if header[:3] != ["start_idx", "end_idx", "class_name"]:
        raise FormatError("unexpected label header", line=1)
    scheme = None
    for extra in header[3:]:
        if extra.startswith("scheme="):
            scheme = extra.split("=", 1)[1]
    if ids is None:
        if scheme == "collapsed":
            ids = COLLAPSED_IDS
        elif scheme in ("five", None):
            ids = CLASS_IDS
        else:
            raise FormatError(f"unknown label scheme {scheme!r}", line=1)
    rows: List[Tuple[int, int, int]] = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError("expected start_idx,end_idx,class_name", line=ln)
        try:
            s, e = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError("indices must be integers", line=ln) from None
        name = parts[2].strip()
        if name not in ids:
            raise FormatError(f"unknown class {name!r}", line=ln)
        if e <= s:
            raise FormatError("end_idx must exceed start_idx", line=ln)
        if rows and s < rows[-1][1]:
            raise FormatError("events must be sorted and non-overlapping", line=ln)
        rows.append((s, e, ids[name]))
    total = n if n is not None else (rows[-1][1] if rows else 0)
    labels = np.zeros(total, dtype=np.int64)
    for s, e, c in rows:
        if e > total:
            raise FormatError("event extends past declared length")
        labels[s:e] = c
    return LabelSequence(labels)


def read_labels(path, n: Optional[int] = None,
                ids: Optional[Dict[str, int]] = None) -> LabelSequence:
    return parse_labels(Path(path).read_text(encoding="utf-8"), n, ids)


def label_scheme(text: str) -> str:
    """'five' or 'collapsed', from the header; defaults to 'five'."""
    header = text.splitlines()[0].split(",") if text else []
    for extra in header[3:]:
        if extra.startswith("scheme="):
            return extra.split("=", 1)[1]
    return "five"


# ---------------------------------------------------------------------------
# velocity traces

def write_trace(trace: VelocityTrace, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS + [f"rate_hz={_fmt(trace.rate_hz)}"])
        ch = trace.channels()
        for i in range(len(trace)):
            w.writerow([_fmt(trace.t[i])] + [_fmt(v) for v in ch[i]]
                       + [int(trace.valid[i])])


def read_trace(path) -> VelocityTrace:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:len(TRACE_COLUMNS)] != TRACE_COLUMNS:
            raise FormatError("unexpected trace header", line=1)
        rate = None
        for extra in header[len(TRACE_COLUMNS):]:
            if extra.startswith("rate_hz="):
                rate = float(extra.split("=", 1)[1])
        if rate is None:
            raise FormatError("missing rate_hz in header", line=1)
        rows = [row for row in reader if row]
    data = np.asarray([[float(v) for v in row] for row in rows])
    return VelocityTrace(
        t=data[:, 0], eye_abs=data[:, 1], head_abs=data[:, 2],
        eye_az=data[:, 3], head_az=data[:, 4], eye_el=data[:, 5],
        head_el=data[:, 6], valid=data[:, 7].astype(bool), rate_hz=rate)


# ---------------------------------------------------------------------------
# configuration (TOML key-value trees)

def _config_from_dict(cls, data: dict):
    names = {f.name for f in dc_fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise FormatError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for k, v in data.items():
        if isinstance(v, list):
            v = tuple(v)
        kwargs[k] = v
    return cls(**kwargs)


def load_scenario_config(path) -> ScenarioConfig:
    data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    return _config_from_dict(ScenarioConfig, data)


def load_filter_config(path) -> FilterConfig:
    data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    return _config_from_dict(FilterConfig, data)


def load_cleaning_config(path) -> CleaningConfig:
    data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    return _config_from_dict(CleaningConfig, data)


def load_elc_config(path) -> ElcConfig:
    data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    return _config_from_dict(ElcConfig, data)
