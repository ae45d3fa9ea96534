import numpy as np
import pytest

from gazekit.metrics import (event_error_rate, event_f1_earliest,
                             event_kappa_largest, kappa_from_confusion,
                             levenshtein, majority_vote_events, sample_scores)


def _kappa_closed_form(C):
    """Independent closed-form oracle, kept deliberately naive."""
    C = np.asarray(C, dtype=float)
    n = C.sum()
    po = sum(C[i, i] for i in range(C.shape[0])) / n
    pe = sum(C[i, :].sum() * C[:, i].sum() for i in range(C.shape[0])) / n ** 2
    return (po - pe) / (1 - pe)


def test_kappa_matches_closed_form_on_random_matrices(rng):
    for _ in range(1000):
        k = int(rng.integers(2, 6))
        C = rng.integers(0, 50, size=(k, k))
        if C.sum() == 0:
            continue
        pe_guard = _kappa_closed_form(C) if C.sum() else None
        # skip the degenerate all-one-class case the oracle divides by zero on
        if not np.isfinite(pe_guard):
            continue
        assert kappa_from_confusion(C) == pytest.approx(pe_guard, abs=1e-12)


def test_kappa_perfect_and_chance():
    assert kappa_from_confusion(np.eye(3) * 10) == pytest.approx(1.0)
    # independent marginals -> kappa 0
    C = np.outer([10, 20], [15, 15]).astype(float)
    assert kappa_from_confusion(C) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        kappa_from_confusion(np.zeros((2, 2)))


def test_sample_scores_excludes_none_pairwise():
    ref = np.array([1, 1, 0, 2, 2, 3])
    test = np.array([1, 0, 1, 2, 3, 3])
    sc = sample_scores(ref, test)
    # positions 1 and 2 drop (none on either side) -> 4 scored samples
    assert sc.n_samples == 4
    assert sc.confusion.sum() == 4
    with pytest.raises(ValueError):
        sample_scores(np.zeros(3, dtype=int), np.zeros(3, dtype=int))


def test_sample_scores_perfect():
    ref = np.array([1, 1, 2, 3, 3, 2])
    sc = sample_scores(ref, ref)
    assert sc.kappa == pytest.approx(1.0)
    assert all(v == pytest.approx(1.0) for v in sc.f1.values())


def test_majority_vote_tie_goes_to_lowest_class():
    ref = np.array([1, 1, 1, 1])
    test = np.array([2, 2, 3, 3])
    C, classes = majority_vote_events(ref, test)
    assert classes == [1, 2, 3]
    assert C[0].tolist() == [0, 1, 0]


def test_event_f1_counts_and_timing():
    rate = 100.0  # 10 ms per sample
    ref = np.array([0] * 5 + [1] * 10 + [0] * 5 + [1] * 10 + [0] * 5)
    test = np.array([0] * 7 + [1] * 10 + [0] * 18)  # first event shifted +2
    res = event_f1_earliest(ref, test, rate)
    r = res[1]
    assert (r.hits, r.misses, r.false_alarms) == (1, 1, 0)
    assert r.f1 == pytest.approx(2 / 3)
    assert r.rto_onset_ms == pytest.approx(20.0)
    assert r.rto_offset_ms == pytest.approx(20.0)


def test_event_kappa_largest_matches_cross_category():
    ref = np.array([1] * 10 + [2] * 10)
    test = np.array([1] * 10 + [3] * 10)
    C, kap, classes = event_kappa_largest(ref, test)
    i2, i3 = classes.index(2), classes.index(3)
    assert C[i2, i3] == 1
    assert kap < 1.0


def test_levenshtein_examples():
    assert levenshtein("FSFS", "FSFS") == 0
    assert levenshtein("FSFS", "FSFSF") == 1
    assert levenshtein("kitten", "sitting") == 3


def _lev_oracle(a, b):
    """Full-matrix DP, written independently of the two-row version."""
    n, m = len(a), len(b)
    D = np.zeros((n + 1, m + 1), dtype=int)
    D[:, 0] = np.arange(n + 1)
    D[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            D[i, j] = min(D[i - 1, j] + 1, D[i, j - 1] + 1,
                          D[i - 1, j - 1] + (a[i - 1] != b[j - 1]))
    return int(D[n, m])


def test_levenshtein_matches_dp_oracle(rng):
    for _ in range(1000):
        a = rng.integers(1, 4, size=int(rng.integers(0, 12))).tolist()
        b = rng.integers(1, 4, size=int(rng.integers(0, 12))).tolist()
        assert levenshtein(a, b) == _lev_oracle(a, b)


def test_event_error_rate_examples():
    # FSFS vs FSFSF: one insertion over four reference events
    ref = np.array([1] * 3 + [2] * 3 + [1] * 3 + [2] * 3)
    test = np.array([1] * 3 + [2] * 3 + [1] * 3 + [2] * 2 + [1])
    assert event_error_rate(ref, ref) == 0.0
    assert event_error_rate(ref, test) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        event_error_rate(np.zeros(5, dtype=int), test[:5])
