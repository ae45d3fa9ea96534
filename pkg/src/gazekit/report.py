"""Figure rendering for the evaluation report: velocity traces with label
bands and confusion-matrix heatmaps. Files only; no interactive backends."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import LabelSequence
from .metrics import ElcReport
from .signal import VelocityTrace

# label band colours by class id; anything unknown falls back to grey
_BAND_COLOURS = {0: "#bdbdbd", 1: "#74add1", 2: "#a6d96a",
                 3: "#fdae61", 4: "#d73027"}


def _label_bands(ax, t, labels, alpha):
    arr = np.asarray(labels.labels if isinstance(labels, LabelSequence) else labels)
    change = np.flatnonzero(np.diff(arr)) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [arr.size]))
    for s, e in zip(starts, ends):
        c = _BAND_COLOURS.get(int(arr[s]), "#eeeeee")
        ax.axvspan(t[s], t[min(e, len(t) - 1)], color=c, alpha=alpha, lw=0)


def plot_trace(trace: VelocityTrace, path, labels=None,
               test_labels=None, title: Optional[str] = None):
    """Two-panel trace figure: absolute velocities on top, the signed
    azimuth/elevation components below. Optional label bands behind the
    curves (reference on top, classifier output below)."""
    fig, axes = plt.subplots(2, 1, figsize=(12, 6), sharex=True)
    if labels is not None:
        _label_bands(axes[0], trace.t, labels, alpha=0.35)
    if test_labels is not None:
        _label_bands(axes[1], trace.t, test_labels, alpha=0.35)
    axes[0].plot(trace.t, trace.eye_abs, lw=0.8, label="|eye| deg/s")
    axes[0].plot(trace.t, trace.head_abs, lw=0.8, label="|head| deg/s")
    axes[0].legend(loc="upper right", fontsize=8)
    axes[0].set_ylabel("deg/s")
    axes[1].plot(trace.t, trace.eye_az, lw=0.7, label="eye az")
    axes[1].plot(trace.t, trace.eye_el, lw=0.7, label="eye el")
    axes[1].plot(trace.t, trace.head_az, lw=0.7, label="head az")
    axes[1].plot(trace.t, trace.head_el, lw=0.7, label="head el")
    axes[1].legend(loc="upper right", fontsize=8)
    axes[1].set_ylabel("deg/s")
    axes[1].set_xlabel("time (s)")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def plot_confusion(C: np.ndarray, class_names: Sequence[str], path,
                   title: Optional[str] = None, normalize: bool = True):
    """Heatmap of a confusion matrix with counts annotated per cell."""
    C = np.asarray(C, dtype=float)
    show = C / C.sum(axis=1, keepdims=True).clip(min=1) if normalize else C
    fig, ax = plt.subplots(figsize=(1.2 * len(class_names) + 2.5,
                                    1.0 * len(class_names) + 2.0))
    im = ax.imshow(show, cmap="Blues", vmin=0.0,
                   vmax=1.0 if normalize else None)
    ax.set_xticks(range(len(class_names)), class_names, rotation=30, ha="right")
    ax.set_yticks(range(len(class_names)), class_names)
    ax.set_xlabel("test")
    ax.set_ylabel("reference")
    for i in range(C.shape[0]):
        for j in range(C.shape[1]):
            colour = "white" if show[i, j] > 0.5 * (show.max() or 1) else "black"
            ax.text(j, i, f"{C[i, j]:g}", ha="center", va="center",
                    color=colour, fontsize=9)
    fig.colorbar(im, ax=ax, fraction=0.046)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def plot_elc_timing(report: ElcReport, path, title: Optional[str] = None):
    """Histogram of per-event boundary displacement (L2, ms) by class."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for c, name in zip(report.classes, report.class_names):
        vals = [m.l2_ms for m in report.matched if m.cls == c]
        if vals:
            ax.hist(vals, bins=20, alpha=0.55, label=name)
    ax.set_xlabel("boundary displacement L2 (ms)")
    ax.set_ylabel("matched events")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def metrics_table(rows: Dict[str, float]) -> str:
    """Delimited key,value text for the report's scalar metrics."""
    lines = ["metric,value"]
    for k, v in rows.items():
        lines.append(f"{k},{format(float(v), '.9g')}")
    return "\n".join(lines) + "\n"
