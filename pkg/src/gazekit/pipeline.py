"""Glue between recordings and the two classifiers: velocity conditioning,
window feature extraction for the forest, and sequence packing for the
recurrent model. Keeps training and inference preprocessing identical."""
from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import LabelSequence, Recording, collapse_labels
from .features import ALL_CHANNELS, build_feature_matrix, dedup_training_set
from .forest import ForestConfig, ForestModel, classify_rf, train_forest
from .rnn import RnnConfig, RnnModel, classify_rnn, train_rnn
from .signal import FilterConfig, VelocityTrace, direction_series, make_velocity_trace


def condition(rec: Recording, cfg: FilterConfig = FilterConfig()
              ) -> Tuple[VelocityTrace, np.ndarray, np.ndarray]:
    """Velocity trace plus the (interpolated) eye/head direction series the
    window features consume."""
    if cfg.resample_hz is not None and abs(cfg.resample_hz - rec.rate_hz) > 1e-9:
        from .signal import _resample_recording
        rec = _resample_recording(rec, cfg.resample_hz)
    trace = make_velocity_trace(rec, cfg)
    eye, head = direction_series(rec, cfg)
    return trace, eye, head


def forest_training_rows(rec: Recording, labels: LabelSequence,
                         fcfg: FilterConfig = FilterConfig(),
                         half_window: int = 7,
                         channels: Sequence[int] = ALL_CHANNELS):
    """(X, y, w) rows for one labelled recording: full windows only, none and
    confidence-masked samples dropped, labels collapsed to the 3-class view."""
    trace, eye, head = condition(rec, fcfg)
    y_full = collapse_labels(labels.labels if isinstance(labels, LabelSequence)
                             else labels)
    if len(y_full) != len(trace):
        raise ValueError("labels must align with the recording")
    X, idx, w = build_feature_matrix(trace, eye, head, half_window,
                                     confidence=rec.confidence,
                                     channels=channels, pad_edges=False)
    y = y_full[idx]
    keep = (y > 0) & trace.valid[idx]
    return X[keep], y[keep], w[keep]


def build_forest_training_set(recs: Sequence[Recording],
                              label_seqs: Sequence[LabelSequence],
                              fcfg: FilterConfig = FilterConfig(),
                              cfg: ForestConfig = ForestConfig(),
                              dedup: bool = True):
    parts = [forest_training_rows(r, l, fcfg, cfg.window_half_s, cfg.channels)
             for r, l in zip(recs, label_seqs)]
    X = np.concatenate([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    w = np.concatenate([p[2] for p in parts])
    if dedup:
        X, y, w = dedup_training_set(X, y, w)
    return X, y, w


def train_forest_on_recordings(recs, label_seqs,
                               fcfg: FilterConfig = FilterConfig(),
                               cfg: ForestConfig = ForestConfig(),
                               dedup: bool = True) -> ForestModel:
    X, y, w = build_forest_training_set(recs, label_seqs, fcfg, cfg, dedup)
    return train_forest(X, y, w, cfg)


def classify_recording_rf(model: ForestModel, rec: Recording,
                          fcfg: FilterConfig = FilterConfig()) -> LabelSequence:
    trace, eye, head = condition(rec, fcfg)
    return LabelSequence(classify_rf(model, trace, eye, head))


def rnn_sequence(rec: Recording, labels: Optional[LabelSequence],
                 fcfg: FilterConfig = FilterConfig()):
    """(x, y, w) for one recording: the six velocity channels per step,
    3-class targets shifted to 0..2 with invalid/none steps at -1, and the
    tracker confidence as the per-step loss weight."""
    trace, _, _ = condition(rec, fcfg)
    x = trace.channels()
    if labels is None:
        return x, None, None
    y_full = collapse_labels(labels.labels if isinstance(labels, LabelSequence)
                             else labels)
    if len(y_full) != len(trace):
        raise ValueError("labels must align with the recording")
    y = np.where((y_full > 0) & trace.valid, y_full - 1, -1)
    w = rec.confidence.copy()
    return x, y, w


def train_rnn_on_recordings(recs, label_seqs, fcfg: FilterConfig = FilterConfig(),
                            cfg: RnnConfig = RnnConfig(),
                            epochs: Optional[int] = None,
                            verbose: bool = False) -> RnnModel:
    xs: List[np.ndarray] = []
    ys: List[np.ndarray] = []
    ws: List[np.ndarray] = []
    for rec, labels in zip(recs, label_seqs):
        x, y, w = rnn_sequence(rec, labels, fcfg)
        xs.append(x)
        ys.append(y)
        ws.append(w)
    return train_rnn(xs, ys, ws, cfg, epochs=epochs, verbose=verbose)


def classify_recording_rnn(model: RnnModel, rec: Recording,
                           fcfg: FilterConfig = FilterConfig()) -> LabelSequence:
    trace, _, _ = condition(rec, fcfg)
    return LabelSequence(classify_rnn(model, trace))
