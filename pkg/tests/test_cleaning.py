import numpy as np
import pytest

from gazekit.cleaning import CleaningConfig, clean_labels
from gazekit.core import events_from_labels

RATE = 300.0
CFG = CleaningConfig()


def _random_labels(rng, n):
    out = np.zeros(n, dtype=np.int64)
    i = 0
    while i < n:
        c = int(rng.integers(0, 5))
        m = int(rng.integers(1, 40))
        out[i:i + m] = c
        i += m
    return out


def _check_thresholds(labels):
    for ev in events_from_labels(labels):
        dur = ev.n_samples / RATE
        if ev.cls in (1, 2):
            assert dur >= CFG.min_fix_s - 1e-12
        if ev.cls == 4:
            assert dur <= CFG.max_sacc_s + 1e-12
        if ev.cls != 0:
            assert dur >= CFG.min_event_s - 1e-12


def test_random_corpus_idempotent_and_threshold_conformant(rng):
    for _ in range(1000):
        labels = _random_labels(rng, int(rng.integers(20, 250)))
        once = clean_labels(labels, rate_hz=RATE).labels
        _check_thresholds(once)
        twice = clean_labels(once, rate_hz=RATE).labels
        assert np.array_equal(once, twice)


def test_merge_bridges_short_gap():
    # two 60-sample fixations separated by a 10-sample unlabelled gap
    # (33 ms < 75 ms) merge into one event
    labels = np.array([1] * 60 + [0] * 10 + [1] * 60)
    out = clean_labels(labels, rate_hz=RATE).labels
    events = events_from_labels(out)
    assert len(events) == 1 and events[0].cls == 1


def test_merge_respects_gap_threshold():
    gap = int(0.100 * RATE)  # 100 ms > 75 ms: no merge
    labels = np.array([1] * 60 + [0] * gap + [1] * 60)
    out = clean_labels(labels, rate_hz=RATE).labels
    assert (out == 0).sum() == gap


def test_merge_respects_angular_separation():
    labels = np.array([1] * 60 + [0] * 10 + [1] * 60)
    dirs = np.tile([0.0, 0.0, 1.0], (130, 1))
    far = np.array([np.sin(np.deg2rad(2.0)), 0.0, np.cos(np.deg2rad(2.0))])
    dirs[70:] = far  # 2 deg > 0.5 deg separation
    out = clean_labels(labels, gaze_dirs=dirs, rate_hz=RATE).labels
    assert (out == 0).sum() == 10
    near = np.array([np.sin(np.deg2rad(0.1)), 0.0, np.cos(np.deg2rad(0.1))])
    dirs[70:] = near
    out2 = clean_labels(labels, gaze_dirs=dirs, rate_hz=RATE).labels
    assert (out2 == 0).sum() == 0


def test_longer_event_subtype_wins_merge():
    labels = np.array([1] * 80 + [0] * 10 + [2] * 30)
    out = clean_labels(labels, rate_hz=RATE).labels
    assert set(out[80:90]) == {1}


def test_short_fixation_deleted():
    labels = np.array([4] * 9 + [1] * 10 + [4] * 9)  # 33 ms fixation
    out = clean_labels(labels, rate_hz=RATE).labels
    assert not (out == 1).any()


def test_long_saccade_deleted():
    n = int(0.2 * RATE)  # 200 ms saccade
    labels = np.array([1] * 60 + [4] * n + [1] * 60)
    out = clean_labels(labels, rate_hz=RATE).labels
    assert not (out == 4).any()


def test_tiny_event_deleted():
    labels = np.array([1] * 60 + [3] * 2 + [1] * 60)  # 6.7 ms pursuit
    out = clean_labels(labels, rate_hz=RATE).labels
    assert not (out == 3).any()


def test_absorb_deleted_extends_neighbour():
    labels = np.array([3] * 60 + [4] * 2 + [3] * 60)
    cfg = CleaningConfig(absorb_deleted=True)
    out = clean_labels(labels, rate_hz=RATE, cfg=cfg).labels
    assert (out == 3).all()


def test_clean_preserves_generated_ground_truth(small_recording):
    rec, labels = small_recording
    from gazekit.geometry import gaze_in_world
    world = gaze_in_world(rec.eye_dir, rec.head_rot)
    out = clean_labels(labels, gaze_dirs=world, rate_hz=rec.rate_hz)
    assert np.array_equal(out.labels, labels.labels)
