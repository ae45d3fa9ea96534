"""Core domain types: samples, recordings, the label taxonomy, and the
run-length event view shared by every other module."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional, Sequence

import numpy as np

# Samples with tracker confidence below this value are masked to NONE at
# ingestion. Configurable via Recording.from_arrays(min_confidence=...).
DEFAULT_MIN_CONFIDENCE = 0.3

_UNIT_TOL = 1e-9


class GazeClass(IntEnum):
    """Five-way label taxonomy.

    NONE covers blinks, unlabelled stretches, and low-confidence samples.
    A provenance tag for why a sample is NONE lives in ``LabelSequence.none_tag``.
    """

    NONE = 0
    FIXATION_STATIONARY = 1
    FIXATION_TRANSLATION = 2
    PURSUIT = 3
    SACCADE = 4


class CollapsedClass(IntEnum):
    """Three-way view used by the classifiers: both fixation sub-types merge."""

    NONE = 0
    FIXATION = 1
    PURSUIT = 2
    SACCADE = 3


# Why a sample carries the NONE label (optional metadata for the UI).
NONE_TAG_BLINK = "blink"
NONE_TAG_LOW_CONFIDENCE = "low_confidence"
NONE_TAG_UNCODED = "uncoded"


def collapse_class(c: GazeClass) -> CollapsedClass:
    if c in (GazeClass.FIXATION_STATIONARY, GazeClass.FIXATION_TRANSLATION):
        return CollapsedClass.FIXATION
    if c == GazeClass.PURSUIT:
        return CollapsedClass.PURSUIT
    if c == GazeClass.SACCADE:
        return CollapsedClass.SACCADE
    return CollapsedClass.NONE


_COLLAPSE_LUT = np.array([collapse_class(GazeClass(i)) for i in range(5)], dtype=np.int64)


def collapse_labels(labels: np.ndarray) -> np.ndarray:
    """Vectorized 5-class -> 3-class collapse over an integer label array."""
    return _COLLAPSE_LUT[np.asarray(labels, dtype=np.int64)]


@dataclass(frozen=True)
class GazeSample:
    """One time-stamped gaze observation.

    ``eye_dir`` is a unit vector in the head frame; ``head_rot`` is a unit
    quaternion (w, x, y, z) rotating world-frame vectors into the head frame.
    """

    t: float
    eye_dir: np.ndarray
    head_rot: np.ndarray
    confidence: float

    def __post_init__(self):
        eye = np.asarray(self.eye_dir, dtype=float)
        quat = np.asarray(self.head_rot, dtype=float)
        if eye.shape != (3,):
            raise ValueError("eye_dir must be a 3-vector")
        if quat.shape != (4,):
            raise ValueError("head_rot must be a quaternion (w, x, y, z)")
        if abs(np.linalg.norm(eye) - 1.0) > 1e-6:
            raise ValueError("eye_dir must be unit length")
        if abs(np.linalg.norm(quat) - 1.0) > 1e-6:
            raise ValueError("head_rot must be a unit quaternion")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence must lie in [0, 1]")
        object.__setattr__(self, "eye_dir", eye / np.linalg.norm(eye))
        object.__setattr__(self, "head_rot", quat / np.linalg.norm(quat))


class Recording:
    """An ordered gaze stream with a nominal sampling rate.

    Stored column-wise as numpy arrays; immutable after construction.
    """

    __slots__ = ("t", "eye_dir", "head_rot", "confidence", "rate_hz")

    def __init__(self, t, eye_dir, head_rot, confidence, rate_hz: float):
        t = np.asarray(t, dtype=float)
        eye_dir = np.asarray(eye_dir, dtype=float)
        head_rot = np.asarray(head_rot, dtype=float)
        confidence = np.asarray(confidence, dtype=float)
        n = len(t)
        if eye_dir.shape != (n, 3) or head_rot.shape != (n, 4) or confidence.shape != (n,):
            raise ValueError("column shapes inconsistent with timestamp length")
        if n >= 2 and not np.all(np.diff(t) > 0):
            raise ValueError("timestamps must be strictly increasing")
        if rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        norms = np.linalg.norm(eye_dir, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("eye directions must be unit vectors")
        qnorms = np.linalg.norm(head_rot, axis=1)
        if np.any(np.abs(qnorms - 1.0) > 1e-6):
            raise ValueError("head rotations must be unit quaternions")
        self.t = t
        self.eye_dir = eye_dir / norms[:, None]
        self.head_rot = head_rot / qnorms[:, None]
        self.confidence = confidence
        self.rate_hz = float(rate_hz)
        for arr in (self.t, self.eye_dir, self.head_rot, self.confidence):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.t)

    def low_confidence_mask(self, threshold: float = DEFAULT_MIN_CONFIDENCE) -> np.ndarray:
        return self.confidence < threshold

    def sample(self, i: int) -> GazeSample:
        return GazeSample(self.t[i], self.eye_dir[i], self.head_rot[i], self.confidence[i])


@dataclass(frozen=True)
class Event:
    """Half-open run [start_idx, end_idx) of one class within a label sequence."""

    cls: int
    start_idx: int
    end_idx: int
    onset_t: Optional[float] = None
    offset_t: Optional[float] = None

    def __post_init__(self):
        if self.end_idx <= self.start_idx:
            raise ValueError("event must span at least one sample")

    @property
    def n_samples(self) -> int:
        return self.end_idx - self.start_idx


@dataclass
class LabelSequence:
    """Per-sample labels aligned with a recording."""

    labels: np.ndarray
    none_tag: Optional[List[Optional[str]]] = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if self.none_tag is not None and len(self.none_tag) != len(self.labels):
            raise ValueError("none_tag length mismatch")

    def __len__(self):
        return len(self.labels)

    def collapsed(self) -> "LabelSequence":
        return LabelSequence(collapse_labels(self.labels), self.none_tag)


def events_from_labels(labels, t: Optional[np.ndarray] = None) -> List[Event]:
    """Run-length encode a label sequence into a tiling list of events.

    Adjacent events always differ in class; concatenating the spans
    reproduces the input exactly.
    """
    arr = np.asarray(labels.labels if isinstance(labels, LabelSequence) else labels,
                     dtype=np.int64)
    if arr.size == 0:
        raise ValueError("cannot encode an empty label sequence")
    change = np.flatnonzero(np.diff(arr)) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [arr.size]))
    events = []
    for s, e in zip(starts, ends):
        onset = float(t[s]) if t is not None else None
        offset = float(t[e - 1]) if t is not None else None
        events.append(Event(int(arr[s]), int(s), int(e), onset, offset))
    return events


def labels_from_events(events: Sequence[Event], n: Optional[int] = None) -> LabelSequence:
    """Inverse of :func:`events_from_labels`.

    Events must be sorted and non-overlapping; gaps are filled with NONE.
    """
    if not events:
        return LabelSequence(np.zeros(n or 0, dtype=np.int64))
    last = max(ev.end_idx for ev in events)
    if n is None:
        n = last
    elif last > n:
        raise ValueError("event extends past declared length")
    out = np.full(n, int(GazeClass.NONE), dtype=np.int64)
    prev_end = 0
    for ev in sorted(events, key=lambda e: e.start_idx):
        if ev.start_idx < prev_end:
            raise ValueError("events overlap at index %d" % ev.start_idx)
        out[ev.start_idx:ev.end_idx] = ev.cls
        prev_end = ev.end_idx
    return LabelSequence(out)
