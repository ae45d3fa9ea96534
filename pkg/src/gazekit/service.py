"""HTTP/JSON backend for the annotation UI.

Data directory layout: ``<name>.rec.csv`` recordings with optional
``<name>.labels.csv`` label files beside them. Reads are concurrent; label
writes go through a per-recording compare-and-swap on an integer version.
"""
from __future__ import annotations

import threading
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from . import io as gio
from .core import LabelSequence, Recording
from .geometry import gaze_in_world
from .pipeline import condition
from .signal import FilterConfig, VelocityTrace

REC_SUFFIX = ".rec.csv"
LABEL_SUFFIX = ".labels.csv"

_CHANNEL_NAMES = ["eye_abs", "head_abs", "eye_az", "head_az", "eye_el", "head_el"]


class LabelEvent(BaseModel):
    start_idx: int
    end_idx: int
    class_name: str


class LabelSet(BaseModel):
    version: int
    scheme: str = "five"
    events: List[LabelEvent]


class _Store:
    """Per-recording state: lazily loaded recording/trace plus the versioned
    label set. One lock per recording serializes label writes."""

    def __init__(self, data_dir: Path, fcfg: FilterConfig):
        self.data_dir = data_dir
        self.fcfg = fcfg
        self.locks: Dict[str, threading.Lock] = {}
        self.recordings: Dict[str, Recording] = {}
        self.traces: Dict[str, VelocityTrace] = {}
        self.labels: Dict[str, LabelSet] = {}
        self._global = threading.Lock()

    def names(self) -> List[str]:
        return sorted(p.name[:-len(REC_SUFFIX)]
                      for p in self.data_dir.glob(f"*{REC_SUFFIX}"))

    def _lock(self, name: str) -> threading.Lock:
        with self._global:
            return self.locks.setdefault(name, threading.Lock())

    def recording(self, name: str) -> Recording:
        if name not in self.recordings:
            path = self.data_dir / f"{name}{REC_SUFFIX}"
            if not path.exists():
                raise HTTPException(404, f"unknown recording {name!r}")
            try:
                self.recordings[name] = gio.read_recording(path)
            except gio.FormatError as exc:
                raise HTTPException(400, str(exc)) from None
        return self.recordings[name]

    def trace(self, name: str) -> VelocityTrace:
        if name not in self.traces:
            trace, _, _ = condition(self.recording(name), self.fcfg)
            self.traces[name] = trace
        return self.traces[name]

    def label_set(self, name: str) -> LabelSet:
        self.recording(name)   # 404 before anything else
        if name not in self.labels:
            path = self.data_dir / f"{name}{LABEL_SUFFIX}"
            if path.exists():
                text = path.read_text(encoding="utf-8")
                scheme = gio.label_scheme(text)
                names = gio.COLLAPSED_NAMES if scheme == "collapsed" \
                    else gio.CLASS_NAMES
                seq = gio.parse_labels(text, n=len(self.recording(name)))
                events = [LabelEvent(start_idx=ev.start_idx, end_idx=ev.end_idx,
                                     class_name=names[ev.cls])
                          for ev in _nonempty_events(seq)]
                self.labels[name] = LabelSet(version=1, scheme=scheme,
                                             events=events)
            else:
                self.labels[name] = LabelSet(version=0, scheme="five", events=[])
        return self.labels[name]

    def put_labels(self, name: str, incoming: LabelSet) -> LabelSet:
        with self._lock(name):
            current = self.label_set(name)
            if incoming.version != current.version:
                raise HTTPException(
                    409, f"stale version {incoming.version}; "
                         f"current is {current.version}")
            seq, names = _validate_events(incoming, len(self.recording(name)))
            stored = LabelSet(version=current.version + 1,
                              scheme=incoming.scheme, events=incoming.events)
            self.labels[name] = stored
            gio.write_labels(seq, self.data_dir / f"{name}{LABEL_SUFFIX}",
                             names=names)
            return stored


def _nonempty_events(seq: LabelSequence):
    from .core import events_from_labels
    return [ev for ev in events_from_labels(seq) if ev.cls != 0]


def _validate_events(ls: LabelSet, n: int):
    if ls.scheme == "collapsed":
        ids, names = gio.COLLAPSED_IDS, gio.COLLAPSED_NAMES
    elif ls.scheme == "five":
        ids, names = gio.CLASS_IDS, gio.CLASS_NAMES
    else:
        raise HTTPException(400, f"unknown scheme {ls.scheme!r}")
    labels = np.zeros(n, dtype=np.int64)
    prev_end = 0
    for ev in sorted(ls.events, key=lambda e: e.start_idx):
        if ev.class_name not in ids:
            raise HTTPException(400, f"unknown class {ev.class_name!r}")
        if ev.end_idx <= ev.start_idx:
            raise HTTPException(400, "end_idx must exceed start_idx")
        if ev.start_idx < prev_end:
            raise HTTPException(400, f"events overlap at index {ev.start_idx}")
        if ev.end_idx > n:
            raise HTTPException(400, "event extends past the recording")
        labels[ev.start_idx:ev.end_idx] = ids[ev.class_name]
        prev_end = ev.end_idx
    return LabelSequence(labels), names


def _decimate(t: np.ndarray, v: np.ndarray, points: int):
    """Min/max-preserving decimation to exactly ``points`` samples (or the
    raw series when it is already short enough). Each bucket contributes its
    minimum and maximum, emitted in time order, so channel extrema survive."""
    n = len(v)
    if n <= points:
        return t.tolist(), v.tolist()
    n_buckets = max(1, points // 2)
    edges = np.linspace(0, n, n_buckets + 1).astype(int)
    out_t, out_v = [], []
    for b in range(n_buckets):
        s, e = edges[b], max(edges[b] + 1, edges[b + 1])
        seg = v[s:e]
        i_min = s + int(np.argmin(seg))
        i_max = s + int(np.argmax(seg))
        for i in sorted({i_min, i_max}):
            out_t.append(float(t[i]))
            out_v.append(float(v[i]))
        if i_min == i_max:   # keep the promised sample count
            out_t.append(float(t[i_max]))
            out_v.append(float(v[i_max]))
    return out_t, out_v


def create_app(data_dir, fcfg: FilterConfig = FilterConfig()) -> FastAPI:
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise ValueError(f"data directory {data_dir} does not exist")
    store = _Store(data_dir, fcfg)
    app = FastAPI(title="gazekit annotation service")
    app.state.store = store

    @app.get("/api/recordings")
    def list_recordings():
        out = []
        for name in store.names():
            rec = store.recording(name)
            out.append({"name": name, "n_samples": len(rec),
                        "rate_hz": rec.rate_hz,
                        "duration_s": float(rec.t[-1] - rec.t[0])})
        return out

    @app.get("/api/recordings/{name}/trace")
    def get_trace(name: str, start_s: Optional[float] = None,
                  end_s: Optional[float] = None, points: int = 1000):
        if points < 2:
            raise HTTPException(400, "points must be at least 2")
        trace = store.trace(name)
        rec = store.recording(name)
        lo = 0 if start_s is None else int(np.searchsorted(trace.t, start_s))
        hi = len(trace) if end_s is None else int(
            np.searchsorted(trace.t, end_s, side="right"))
        if hi - lo < 1:
            raise HTTPException(400, "empty time range")
        t = trace.t[lo:hi]
        channels = {}
        for cname, col in zip(_CHANNEL_NAMES, trace.channels()[lo:hi].T):
            ct, cv = _decimate(t, col, points)
            channels[cname] = {"t": ct, "v": cv}
        ct, cv = _decimate(t, rec.confidence[lo:hi], points)
        channels["confidence"] = {"t": ct, "v": cv}
        return {"name": name, "rate_hz": trace.rate_hz,
                "start_s": float(t[0]), "end_s": float(t[-1]),
                "n_source_samples": int(hi - lo), "channels": channels}

    @app.get("/api/recordings/{name}/gaze")
    def get_gaze(name: str, stride: int = 1):
        if stride < 1:
            raise HTTPException(400, "stride must be positive")
        rec = store.recording(name)
        world = gaze_in_world(rec.eye_dir, rec.head_rot)[::stride]
        return {"name": name, "t": rec.t[::stride].tolist(),
                "x": world[:, 0].tolist(), "y": world[:, 1].tolist(),
                "z": world[:, 2].tolist()}

    @app.get("/api/recordings/{name}/labels")
    def get_labels(name: str):
        return store.label_set(name)

    @app.put("/api/recordings/{name}/labels")
    def put_labels(name: str, body: LabelSet):
        return store.put_labels(name, body)

    @app.get("/api/recordings/{name}/export", response_class=PlainTextResponse)
    def export_labels(name: str):
        ls = store.label_set(name)
        seq, names = _validate_events(ls, len(store.recording(name)))
        return PlainTextResponse(
            gio.serialize_labels(seq, names),
            media_type="text/csv",
            headers={"Content-Disposition":
                     f'attachment; filename="{name}{LABEL_SUFFIX}"'})

    return app
