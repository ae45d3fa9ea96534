"""Label post-processing: merge near-coincident fixations, drop implausibly
short fixations, overlong saccades, and sub-threshold events."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import GazeClass, LabelSequence, events_from_labels
from .signal import angular_between

DEFAULT_FIXATION_IDS = (int(GazeClass.FIXATION_STATIONARY),
                        int(GazeClass.FIXATION_TRANSLATION))
DEFAULT_SACCADE_ID = int(GazeClass.SACCADE)
DEFAULT_NONE_ID = int(GazeClass.NONE)


@dataclass(frozen=True)
class CleaningConfig:
    merge_fix_max_gap_s: float = 0.075
    merge_fix_max_sep_deg: float = 0.5
    min_fix_s: float = 0.050
    max_sacc_s: float = 0.150
    min_event_s: float = 0.010
    absorb_deleted: bool = False   # deleted events become NONE unless set

    def __post_init__(self):
        for name in ("merge_fix_max_gap_s", "merge_fix_max_sep_deg",
                     "min_fix_s", "max_sacc_s", "min_event_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _mean_dir(dirs: np.ndarray) -> np.ndarray:
    m = dirs.mean(axis=0)
    norm = np.linalg.norm(m)
    if norm < 1e-12:
        raise ValueError("degenerate mean gaze direction")
    return m / norm


def _one_pass(labels: np.ndarray, gaze_dirs: Optional[np.ndarray], rate_hz: float,
              cfg: CleaningConfig, fixation_ids, saccade_id, none_id) -> np.ndarray:
    out = labels.copy()
    events = events_from_labels(out)

    # 1: merge qualifying fixation pairs across a short unlabelled gap
    fix_events = [(i, ev) for i, ev in enumerate(events) if ev.cls in fixation_ids]
    for (i1, a), (i2, b) in zip(fix_events, fix_events[1:]):
        between = events[i1 + 1:i2]
        if any(ev.cls != none_id for ev in between):
            continue
        gap = (b.start_idx - a.end_idx) / rate_hz
        if gap > cfg.merge_fix_max_gap_s:
            continue
        if gaze_dirs is not None:
            sep = angular_between(_mean_dir(gaze_dirs[a.start_idx:a.end_idx]),
                                  _mean_dir(gaze_dirs[b.start_idx:b.end_idx]))
            if sep >= cfg.merge_fix_max_sep_deg:
                continue
        # longer event's sub-type wins the bridged gap; tie -> earlier
        winner = a.cls if a.n_samples >= b.n_samples else b.cls
        out[a.end_idx:b.start_idx] = winner

    # 2-4: deletions
    for ev in events_from_labels(out):
        dur = ev.n_samples / rate_hz
        delete = ((ev.cls in fixation_ids and dur < cfg.min_fix_s)
                  or (ev.cls == saccade_id and dur > cfg.max_sacc_s)
                  or (ev.cls != none_id and dur < cfg.min_event_s))
        if delete:
            if cfg.absorb_deleted and ev.start_idx > 0:
                out[ev.start_idx:ev.end_idx] = out[ev.start_idx - 1]
            else:
                out[ev.start_idx:ev.end_idx] = none_id
    return out


def clean_labels(seq, gaze_dirs=None, rate_hz: float = 300.0,
                 cfg: CleaningConfig = CleaningConfig(),
                 fixation_ids: Sequence[int] = DEFAULT_FIXATION_IDS,
                 saccade_id: int = DEFAULT_SACCADE_ID,
                 none_id: int = DEFAULT_NONE_ID) -> LabelSequence:
    """Apply the cleaning rules in order (merge, then the three deletions)
    until the sequence is a fixed point, which makes the whole operation
    idempotent by construction.

    gaze_dirs are world-frame gaze directions aligned with the labels; when
    omitted, the angular-separation condition for merging is skipped.
    """
    labels = np.asarray(seq.labels if isinstance(seq, LabelSequence) else seq,
                        dtype=np.int64)
    if gaze_dirs is not None:
        gaze_dirs = np.asarray(gaze_dirs, dtype=float)
        if gaze_dirs.shape != (len(labels), 3):
            raise ValueError("gaze_dirs must align with the label sequence")
    fixation_ids = tuple(fixation_ids)
    prev = labels
    for _ in range(len(labels) + 1):
        cur = _one_pass(prev, gaze_dirs, rate_hz, cfg, fixation_ids,
                        saccade_id, none_id)
        if np.array_equal(cur, prev):
            break
        prev = cur
    return LabelSequence(prev)
