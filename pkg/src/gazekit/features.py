"""Handcrafted per-sample window features for the window-based classifier."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .signal import VelocityTrace, angular_between

ALL_CHANNELS = (0, 1, 2, 3, 4, 5)   # |we|, |wh|, we_az, wh_az, we_el, wh_el
DEDUP_QUANTUM = 1e-6                # deg/s; duplicates from interpolation merge


@dataclass
class WindowFeatures:
    """Feature vector for one sample: the six velocity channels over the
    2s+1 window (sample-major), the fore/aft mean-direction angular
    distances for eye and head, and the velocity deviations."""

    vector: np.ndarray
    delta_theta_eye: float
    delta_theta_head: float
    sigma_eye: float
    sigma_head: float
    weight: float
    index: int
    half_window: int


def feature_dim(half_window: int, n_channels: int = 6, n_scalars: int = 4) -> int:
    return n_channels * (2 * half_window + 1) + n_scalars


def _mean_dir(dirs: np.ndarray) -> np.ndarray:
    m = dirs.mean(axis=0)
    return m / np.linalg.norm(m)


def window_features(trace: VelocityTrace, eye_dirs, head_dirs, n: int, s: int,
                    confidence=None,
                    channels: Sequence[int] = ALL_CHANNELS) -> WindowFeatures:
    """Features for sample n over the window [n-s, n+s]. Raises if the
    window leaves the series bounds (callers pad or skip edges)."""
    if n - s < 0 or n + s >= len(trace):
        raise IndexError(f"window [{n - s}, {n + s}] exceeds series bounds")
    eye_dirs = np.asarray(eye_dirs, dtype=float)
    head_dirs = np.asarray(head_dirs, dtype=float)
    ch = trace.channels()[n - s:n + s + 1, list(channels)]
    d_eye = angular_between(_mean_dir(eye_dirs[n - s:n]), _mean_dir(eye_dirs[n + 1:n + s + 1])) \
        if s > 0 else 0.0
    d_head = angular_between(_mean_dir(head_dirs[n - s:n]), _mean_dir(head_dirs[n + 1:n + s + 1])) \
        if s > 0 else 0.0
    sig_e = float(trace.eye_abs[n - s:n + s + 1].std())
    sig_h = float(trace.head_abs[n - s:n + s + 1].std())
    weight = float(confidence[n]) if confidence is not None else 1.0
    vec = np.concatenate([ch.ravel(), [d_eye, d_head, sig_e, sig_h]])
    return WindowFeatures(vec, float(d_eye), float(d_head), sig_e, sig_h,
                          weight, n, s)


def build_feature_matrix(trace: VelocityTrace, eye_dirs, head_dirs, s: int,
                         confidence=None, channels: Sequence[int] = ALL_CHANNELS,
                         pad_edges: bool = False
                         ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized feature matrix over the whole trace.

    pad_edges=False (training): only samples with a full window are emitted.
    pad_edges=True (inference): edge windows are clamped to the series
    bounds by replicating the terminal samples, keeping the dimensionality
    fixed. Returns (X, sample_indices, weights).
    """
    eye_dirs = np.asarray(eye_dirs, dtype=float)
    head_dirs = np.asarray(head_dirs, dtype=float)
    n = len(trace)
    if s < 1:
        raise ValueError("half-window must be at least 1")
    if n < 2 * s + 1:
        raise ValueError("trace shorter than one full window")
    ch = trace.channels()[:, list(channels)]

    if pad_edges:
        idx = np.arange(n)
    else:
        idx = np.arange(s, n - s)
    offsets = np.arange(-s, s + 1)
    win_idx = np.clip(idx[:, None] + offsets[None, :], 0, n - 1)

    window_vals = ch[win_idx]                       # (m, 2s+1, nch)
    flat = window_vals.reshape(len(idx), -1)

    eye_abs = trace.eye_abs[win_idx]
    head_abs = trace.head_abs[win_idx]
    sig_e = eye_abs.std(axis=1)
    sig_h = head_abs.std(axis=1)

    before = np.clip(idx[:, None] + np.arange(-s, 0)[None, :], 0, n - 1)
    after = np.clip(idx[:, None] + np.arange(1, s + 1)[None, :], 0, n - 1)

    def mean_dirs(dirs, ii):
        m = dirs[ii].mean(axis=1)
        return m / np.linalg.norm(m, axis=1, keepdims=True)

    d_eye = angular_between(mean_dirs(eye_dirs, before), mean_dirs(eye_dirs, after))
    d_head = angular_between(mean_dirs(head_dirs, before), mean_dirs(head_dirs, after))

    X = np.column_stack([flat, d_eye, d_head, sig_e, sig_h])
    w = np.asarray(confidence, dtype=float)[idx] if confidence is not None \
        else np.ones(len(idx))
    return X, idx, w


def dedup_training_set(X: np.ndarray, y: np.ndarray, confidence: np.ndarray
                       ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Merge exact-duplicate feature rows (after quantization); the merged
    weight is the duplicates' mean confidence scaled by their multiplicity,
    so the total weight is conserved. Test sets are never deduplicated."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    confidence = np.asarray(confidence, dtype=float)
    if len(X) == 0:
        return X, y, confidence.copy()
    q = np.round(X / DEDUP_QUANTUM).astype(np.int64)
    key = np.concatenate([q, y.reshape(-1, 1).astype(np.int64)], axis=1)
    _, first, inverse, counts = np.unique(key, axis=0, return_index=True,
                                          return_inverse=True, return_counts=True)
    conf_sum = np.zeros(len(first))
    np.add.at(conf_sum, inverse, confidence)
    weights = conf_sum  # mean confidence * multiplicity
    order = np.argsort(first)
    sel = first[order]
    return X[sel], y[sel], weights[order]
