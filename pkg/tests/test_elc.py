"""Window-based transition matcher: handcrafted two-labeller sequences plus
the structural invariants (monotonicity, conservativeness, symmetry)."""
import numpy as np
import pytest

from gazekit.core import labels_from_events, Event
from gazekit.metrics import ElcConfig, elc_match

F, S, B = 1, 2, 3
NAMES = ["F", "S", "B"]
RATE = 300.0
CFG = ElcConfig(saccade_ids=(S,))


def _seq(events, n):
    return labels_from_events([Event(c, s, e) for c, s, e in events], n).labels


def _l1():
    # labeller 1: four fixations, two gaze shifts, one blink with an
    # unlabelled recovery gap after it
    return _seq([(F, 0, 100), (S, 100, 112), (F, 112, 200), (B, 200, 255),
                 (F, 270, 340), (S, 340, 352), (F, 352, 430)], 430)


def _l2():
    # labeller 2: blink called where labeller 1 saw the gaze shifts, and a
    # long blink swallowing labeller 1's blink entirely
    return _seq([(F, 0, 97), (B, 97, 120), (F, 120, 198), (B, 198, 277),
                 (F, 277, 345), (B, 345, 360), (F, 360, 430)], 430)


def test_two_labeller_sequences_reproduce_described_outcome():
    rep = elc_match(_l1(), _l2(), CFG, rate_hz=RATE, classes=[F, S, B],
                    class_names=NAMES)
    matched_classes = [m.cls for m in rep.matched]
    # every fixation matched, no gaze shift matched
    assert matched_classes.count(F) == 4
    assert S not in matched_classes
    # the blink is detached: fully inside the same-class test blink with its
    # offset transition outside every window
    assert rep.detached == {B: 1}
    assert B not in matched_classes
    # residual cross-type regions include gaze-shift-vs-blink stretches
    region_labels = {r[0] for r in rep.unmatched_regions}
    assert "S-B" in region_labels
    # detached events are excluded from the confusion scores by default
    k = rep.classes.index(B)
    assert rep.confusion[k, k] == 0
    assert rep.confusion[rep.classes.index(F), rep.classes.index(F)] == 4


def test_detached_flag_counts_when_enabled():
    cfg = ElcConfig(saccade_ids=(S,), count_detached_as_match=True)
    rep = elc_match(_l1(), _l2(), cfg, rate_hz=RATE, classes=[F, S, B],
                    class_names=NAMES)
    k = rep.classes.index(B)
    assert rep.confusion[k, k] == 1


def test_identical_sequences_are_perfect():
    labels = _l1()
    rep = elc_match(labels, labels, CFG, rate_hz=RATE)
    assert rep.kappa == pytest.approx(1.0)
    assert all(m.l2_ms == 0.0 for m in rep.matched)
    assert all(m.overlap_ratio == pytest.approx(1.0) for m in rep.matched)
    assert rep.detached == {}
    assert rep.unmatched_ref == []
    off_diag = rep.confusion - np.diag(np.diag(rep.confusion))
    assert not off_diag.any()


def test_uniform_three_sample_shift():
    # none padding at both ends keeps every event boundary interior so the
    # +3-sample shift applies to all of them
    ref = _seq([(F, 10, 60), (S, 60, 66), (F, 66, 150)], 160)
    test = _seq([(F, 13, 63), (S, 63, 69), (F, 69, 153)], 160)
    rep = elc_match(ref, test, CFG, rate_hz=300.0)
    assert len(rep.matched) == 3
    for m in rep.matched:
        assert m.l2_ms == pytest.approx(np.hypot(10.0, 10.0), abs=1e-9)
    assert np.array_equal(rep.corrected_ref, rep.corrected_test)


def test_window_shrink_monotonicity():
    ref, test = _l1(), _l2()
    widths = [(0.025, 0.035), (0.015, 0.020), (0.005, 0.008)]
    counts = []
    for ws, wo in widths:
        cfg = ElcConfig(window_saccade_s=ws, window_other_s=wo, saccade_ids=(S,))
        rep = elc_match(ref, test, cfg, rate_hz=RATE, classes=[F, S, B],
                        class_names=NAMES)
        counts.append(len(rep.matched))
    assert counts == sorted(counts, reverse=True)


def test_correction_never_invents_classes(rng):
    for _ in range(50):
        n = 200
        ref = _random_labels(rng, n)
        test = _random_labels(rng, n)
        rep = elc_match(ref, test, CFG, rate_hz=RATE)
        present = set(np.unique(ref)) | set(np.unique(test))
        assert set(np.unique(rep.corrected_ref)) <= present
        assert set(np.unique(rep.corrected_test)) <= present


def _random_labels(rng, n):
    out = np.zeros(n, dtype=np.int64)
    i = 0
    while i < n:
        c = int(rng.integers(0, 4))
        m = int(rng.integers(3, 25))
        out[i:i + m] = c
        i += m
    return out


def test_overlap_ratio_in_unit_interval(rng):
    for _ in range(50):
        ref = _random_labels(rng, 300)
        test = _random_labels(rng, 300)
        rep = elc_match(ref, test, CFG, rate_hz=RATE)
        for m in rep.matched:
            assert 0.0 < m.overlap_ratio <= 1.0


def test_asymmetry_and_symmetric_mean():
    ref, test = _l1(), _l2()
    fwd = elc_match(ref, test, CFG, rate_hz=RATE, classes=[F, S, B],
                    class_names=NAMES)
    rev = elc_match(test, ref, CFG, rate_hz=RATE, classes=[F, S, B],
                    class_names=NAMES)
    sym = elc_match(ref, test, CFG, rate_hz=RATE, classes=[F, S, B],
                    class_names=NAMES, symmetric=True)
    assert sym.kappa == pytest.approx((fwd.kappa + rev.kappa) / 2)
    assert sym.reverse is not None


def test_mismatched_lengths_error():
    with pytest.raises(ValueError):
        elc_match(np.zeros(5, dtype=int), np.zeros(6, dtype=int), CFG)


def test_both_empty_sequences_give_empty_report():
    rep = elc_match(np.zeros(50, dtype=int), np.zeros(50, dtype=int), CFG,
                    rate_hz=RATE)
    assert rep.matched == []
    assert rep.confusion.size == 0 or rep.confusion.sum() == 0
