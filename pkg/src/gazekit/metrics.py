"""Sample- and event-level agreement metrics.

Includes the classic sample scores (Cohen's kappa, precision/recall, F1),
four event metrics from prior work (majority vote, earliest-overlap F1,
largest-overlap kappa, event error rate), and the window-based transition
matcher with timing correction (ELC).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import LabelSequence, events_from_labels


# ---------------------------------------------------------------------------
# shared helpers

def _as_int_labels(seq) -> np.ndarray:
    if isinstance(seq, LabelSequence):
        return np.asarray(seq.labels, dtype=np.int64)
    return np.asarray(seq, dtype=np.int64)


def _runs(arr: np.ndarray) -> List[Tuple[int, int, int]]:
    """(cls, start, end) runs tiling the array."""
    if arr.size == 0:
        return []
    change = np.flatnonzero(np.diff(arr)) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [arr.size]))
    return [(int(arr[s]), int(s), int(e)) for s, e in zip(starts, ends)]


def _events(arr: np.ndarray, none_id: Optional[int]) -> List[Tuple[int, int, int]]:
    return [r for r in _runs(arr) if none_id is None or r[0] != none_id]


def kappa_from_confusion(C: np.ndarray) -> float:
    """Cohen's kappa with marginal-product chance agreement."""
    C = np.asarray(C, dtype=float)
    total = C.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    po = np.trace(C) / total
    pe = float(np.dot(C.sum(axis=1), C.sum(axis=0))) / (total * total)
    if abs(1.0 - pe) < 1e-15:
        return 1.0 if po >= 1.0 - 1e-15 else 0.0
    return (po - pe) / (1.0 - pe)


def _binary_confusion(C: np.ndarray, c: int) -> np.ndarray:
    tp = C[c, c]
    fn = C[c, :].sum() - tp
    fp = C[:, c].sum() - tp
    tn = C.sum() - tp - fn - fp
    return np.array([[tp, fn], [fp, tn]], dtype=float)


def _prf(C: np.ndarray, c: int) -> Tuple[float, float, float]:
    tp = C[c, c]
    fp = C[:, c].sum() - tp
    fn = C[c, :].sum() - tp
    p = tp / (tp + fp) if tp + fp > 0 else 0.0
    r = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return float(p), float(r), float(f1)


# ---------------------------------------------------------------------------
# sample-level scores

@dataclass
class SampleScores:
    confusion: np.ndarray          # k x k over evaluated samples, none excluded
    classes: List[int]
    kappa: float
    per_class_kappa: Dict[int, float]
    precision: Dict[int, float]
    recall: Dict[int, float]
    f1: Dict[int, float]
    n_samples: int


def sample_scores(ref, test, none_id: Optional[int] = 0,
                  classes: Optional[Sequence[int]] = None) -> SampleScores:
    """Per-sample agreement between two equal-length label sequences.

    Positions where either sequence carries the none class are excluded
    pairwise before scoring.
    """
    r = _as_int_labels(ref)
    t = _as_int_labels(test)
    if r.shape != t.shape:
        raise ValueError("sequences must have equal length")
    if none_id is not None:
        keep = (r != none_id) & (t != none_id)
        r, t = r[keep], t[keep]
    if r.size == 0:
        raise ValueError("no evaluable samples after none exclusion")
    if classes is None:
        classes = sorted(set(np.unique(r)) | set(np.unique(t)))
    classes = [int(c) for c in classes]
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    C = np.zeros((k, k), dtype=np.int64)
    np.add.at(C, (np.vectorize(index.get)(r), np.vectorize(index.get)(t)), 1)
    per_kappa, prec, rec, f1 = {}, {}, {}, {}
    for c in classes:
        i = index[c]
        per_kappa[c] = kappa_from_confusion(_binary_confusion(C, i))
        prec[c], rec[c], f1[c] = _prf(C, i)
    return SampleScores(C, classes, kappa_from_confusion(C), per_kappa,
                        prec, rec, f1, int(C.sum()))


# ---------------------------------------------------------------------------
# prior event metrics

def majority_vote_events(ref, test, none_id: Optional[int] = 0,
                         classes: Optional[Sequence[int]] = None):
    """Per reference event, assign the test class holding the sample
    plurality inside its bounds. Ties go to the lower class index."""
    r = _as_int_labels(ref)
    t = _as_int_labels(test)
    if r.shape != t.shape:
        raise ValueError("sequences must have equal length")
    ref_events = _events(r, none_id)
    if classes is None:
        classes = sorted(set(np.unique(r)) | set(np.unique(t)))
        if none_id in classes:
            classes.remove(none_id)
    classes = [int(c) for c in classes]
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    C = np.zeros((k, k), dtype=np.int64)
    for cls, s, e in ref_events:
        votes = t[s:e]
        if none_id is not None:
            votes = votes[votes != none_id]
        if votes.size == 0:
            continue
        counts = np.bincount(votes, minlength=max(classes) + 1)
        winner = int(np.argmax(counts[np.array(classes)]))  # ties -> lowest index
        C[index[cls], winner] += 1
    return C, classes


@dataclass
class EventF1Result:
    hits: int
    misses: int
    false_alarms: int
    f1: float
    rto_onset_ms: float   # mean signed onset offset, test minus ref
    rto_offset_ms: float
    rtd_onset_ms: float   # standard deviation of the onset offsets
    rtd_offset_ms: float
    onset_deltas: np.ndarray = field(repr=False, default=None)
    offset_deltas: np.ndarray = field(repr=False, default=None)


def event_f1_earliest(ref, test, rate_hz: float, none_id: Optional[int] = 0
                      ) -> Dict[int, EventF1Result]:
    """Earliest-overlap event matching per class, every other class treated
    as a common opposite. Returns hits/misses/false alarms, F1, and relative
    timing offset/deviation of matched boundaries."""
    r = _as_int_labels(ref)
    t = _as_int_labels(test)
    if r.shape != t.shape:
        raise ValueError("sequences must have equal length")
    ms = 1000.0 / rate_hz
    out = {}
    ref_events = _events(r, none_id)
    test_events = _events(t, none_id)
    for c in sorted({ev[0] for ev in ref_events} | {ev[0] for ev in test_events}):
        refs = [ev for ev in ref_events if ev[0] == c]
        tests = [ev for ev in test_events if ev[0] == c]
        used = [False] * len(tests)
        d_on, d_off = [], []
        hits = 0
        for _, rs, re_ in refs:
            match = None
            for j, (_, ts, te) in enumerate(tests):
                if used[j]:
                    continue
                if ts < re_ and te > rs:  # overlap
                    match = j
                    break
            if match is not None:
                used[match] = True
                hits += 1
                d_on.append((tests[match][1] - rs) * ms)
                d_off.append((tests[match][2] - re_) * ms)
        misses = len(refs) - hits
        fas = used.count(False)
        f1 = 2 * hits / (2 * hits + misses + fas) if (hits + misses + fas) else 0.0
        d_on = np.asarray(d_on)
        d_off = np.asarray(d_off)
        out[c] = EventF1Result(
            hits, misses, fas, f1,
            float(d_on.mean()) if d_on.size else 0.0,
            float(d_off.mean()) if d_off.size else 0.0,
            float(d_on.std()) if d_on.size else 0.0,
            float(d_off.std()) if d_off.size else 0.0,
            d_on, d_off)
    return out


def event_kappa_largest(ref, test, none_id: Optional[int] = 0,
                        classes: Optional[Sequence[int]] = None):
    """Largest-overlap-ratio event matching; events of differing categories
    may match. Returns the event confusion matrix and its Cohen's kappa."""
    r = _as_int_labels(ref)
    t = _as_int_labels(test)
    if r.shape != t.shape:
        raise ValueError("sequences must have equal length")
    ref_events = _events(r, none_id)
    test_events = _events(t, none_id)
    if classes is None:
        classes = sorted({ev[0] for ev in ref_events} | {ev[0] for ev in test_events})
    classes = [int(c) for c in classes]
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    C = np.zeros((k, k), dtype=np.int64)
    for cls, s, e in ref_events:
        best, best_or = None, 0.0
        for tcls, ts, te in test_events:
            inter = min(e, te) - max(s, ts)
            if inter <= 0:
                continue
            union = max(e, te) - min(s, ts)
            o_r = inter / union
            if o_r > best_or:
                best, best_or = tcls, o_r
        if best is not None:
            C[index[cls], index[best]] += 1
    return C, kappa_from_confusion(C) if C.sum() else 0.0, classes


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Iterative two-row edit distance."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def event_error_rate(ref, test, none_id: Optional[int] = 0) -> float:
    """Levenshtein distance between the two event class strings, divided by
    the reference event count."""
    r = _as_int_labels(ref)
    t = _as_int_labels(test)
    ref_str = [ev[0] for ev in _events(r, none_id)]
    test_str = [ev[0] for ev in _events(t, none_id)]
    if not ref_str:
        raise ValueError("reference sequence has no events")
    return levenshtein(ref_str, test_str) / len(ref_str)


# ---------------------------------------------------------------------------
# ELC: window-based transition matching with timing correction

@dataclass(frozen=True)
class ElcConfig:
    window_saccade_s: float = 0.025
    window_other_s: float = 0.035
    count_detached_as_match: bool = False
    saccade_ids: Tuple[int, ...] = ()   # classes treated as gaze shifts

    def __post_init__(self):
        if self.window_saccade_s <= 0 or self.window_other_s <= 0:
            raise ValueError("match windows must be positive")


@dataclass
class MatchedEvent:
    cls: int
    ref_start: int
    ref_end: int
    matched_onset: int    # test transition index matched to the onset
    matched_offset: int
    l2_ms: float
    overlap_ratio: float


@dataclass
class ElcReport:
    confusion: np.ndarray
    classes: List[int]
    class_names: List[str]
    kappa: float
    per_class_kappa: Dict[int, float]
    per_class_f1: Dict[int, float]
    matched: List[MatchedEvent]
    unmatched_ref: List[Tuple[int, int, int]]
    detached: Dict[int, int]
    unmatched_regions: List[Tuple[str, int, int]]
    l2_mean_ms: Dict[int, float]
    l2_std_ms: Dict[int, float]
    overlap_mean: Dict[int, float]
    overlap_std: Dict[int, float]
    corrected_ref: np.ndarray = field(repr=False, default=None)
    corrected_test: np.ndarray = field(repr=False, default=None)
    reverse: Optional["ElcReport"] = None   # populated in symmetric mode

    def overall_l2_mean_ms(self) -> float:
        vals = [m.l2_ms for m in self.matched]
        return float(np.mean(vals)) if vals else 0.0

    def overall_overlap_mean(self) -> float:
        vals = [m.overlap_ratio for m in self.matched]
        return float(np.mean(vals)) if vals else 1.0


def _transition_table(events):
    """Boundary indices of a sequence's events with the classes adjacent to
    each boundary (None at sequence edges or across none gaps)."""
    table = {}
    for cls, s, e in events:
        table.setdefault(s, [None, None])[1] = cls   # class right of boundary
        table.setdefault(e, [None, None])[0] = cls   # class left of boundary
    return sorted((idx, lr[0], lr[1]) for idx, lr in table.items())


def _move_boundary(arr_out, arr_orig, i, m, n):
    """Shift a run boundary from index i to m; displaced samples take the
    class of the run they now belong to."""
    if m > i:
        fill = arr_orig[i - 1] if i > 0 else arr_orig[i]
        arr_out[i:min(m, n)] = fill
    elif m < i:
        fill = arr_orig[i] if i < n else arr_orig[n - 1]
        arr_out[max(m, 0):i] = fill


def _elc_one_way(ref: np.ndarray, test: np.ndarray, cfg: ElcConfig, rate_hz: float,
                 none_id: Optional[int], classes: List[int],
                 class_names: List[str]) -> ElcReport:
    n = len(ref)
    ms = 1000.0 / rate_hz
    if not classes:   # both sequences all-none: empty report
        return ElcReport(np.zeros((0, 0), dtype=np.int64), [], [], 0.0, {}, {},
                         [], [], {}, [], {}, {}, {}, {}, ref.copy(), test.copy())
    ref_events = _events(ref, none_id)
    test_events = _events(test, none_id)
    test_trans = _transition_table(test_events)

    win_sacc = cfg.window_saccade_s * rate_hz
    win_other = cfg.window_other_s * rate_hz

    claimed_onset, claimed_offset = set(), set()
    onset_match: Dict[int, int] = {}   # ref event id -> matched test index
    offset_match: Dict[int, int] = {}
    trans_pairs: List[Tuple[int, int]] = []   # (ref boundary idx, test boundary idx)

    # reference transitions in time order: (index, role, event id, class)
    ref_trans = []
    for ei, (cls, s, e) in enumerate(ref_events):
        ref_trans.append((s, "onset", ei, cls))
        ref_trans.append((e, "offset", ei, cls))
    ref_trans.sort(key=lambda x: (x[0], 0 if x[1] == "offset" else 1))

    for idx, role, ei, cls in ref_trans:
        window = win_sacc if cls in cfg.saccade_ids else win_other
        best = None
        for tidx, left, right in test_trans:
            if tidx < idx - window:
                continue
            if tidx > idx + window:
                break
            if role == "onset":
                if right == cls and tidx not in claimed_onset:
                    best = tidx
                    break
            else:
                if left == cls and tidx not in claimed_offset:
                    best = tidx
                    break
        if best is None:
            continue
        if role == "onset":
            claimed_onset.add(best)
            onset_match[ei] = best
        else:
            claimed_offset.add(best)
            offset_match[ei] = best
        trans_pairs.append((idx, best))

    # matched events: both transitions matched
    matched: List[MatchedEvent] = []
    matched_ids = set()
    for ei, (cls, s, e) in enumerate(ref_events):
        if ei in onset_match and ei in offset_match:
            on_t, off_t = onset_match[ei], offset_match[ei]
            l2 = float(np.hypot((s - on_t) * ms, (e - off_t) * ms))
            ref_mask = np.zeros(n, dtype=bool)
            ref_mask[s:e] = True
            test_mask = np.zeros(n, dtype=bool)
            lo, hi = min(on_t, off_t), max(on_t, off_t)
            test_mask[lo:hi] = test[lo:hi] == cls
            union = np.count_nonzero(ref_mask | test_mask)
            inter = np.count_nonzero(ref_mask & test_mask)
            if inter == 0:
                # both transitions matched but to boundaries of non-overlapping
                # test material; a match without overlap is no match
                continue
            matched.append(MatchedEvent(cls, s, e, on_t, off_t, l2,
                                        inter / union))
            matched_ids.add(ei)

    # detached: unmatched ref events fully inside a same-class test event
    detached: Dict[int, int] = {}
    detached_ids = set()
    for ei, (cls, s, e) in enumerate(ref_events):
        if ei in matched_ids:
            continue
        for tcls, ts, te in test_events:
            if tcls == cls and ts <= s and te >= e:
                detached[cls] = detached.get(cls, 0) + 1
                detached_ids.add(ei)
                break

    # timing correction on every matched transition point, both sequences
    ref_corr = ref.copy()
    test_corr = test.copy()
    for ridx, tidx in sorted(trans_pairs):
        m = int(round((ridx + tidx) / 2.0))
        _move_boundary(ref_corr, ref, ridx, m, n)
        _move_boundary(test_corr, test, tidx, m, n)

    # corrected spans of matched / detached ref events (for region attribution)
    def corrected_span(ei):
        cls, s, e = ref_events[ei]
        on = onset_match.get(ei)
        off = offset_match.get(ei)
        cs = int(round((s + on) / 2.0)) if on is not None else s
        ce = int(round((e + off) / 2.0)) if off is not None else e
        return cs, ce

    matched_spans = [(corrected_span(ei), ref_events[ei][0]) for ei in matched_ids]
    detached_spans = [(corrected_span(ei), ref_events[ei][0]) for ei in detached_ids]

    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    C = np.zeros((k, k), dtype=np.int64)
    for ev in matched:
        C[index[ev.cls], index[ev.cls]] += 1
    if cfg.count_detached_as_match:
        for cls, cnt in detached.items():
            C[index[cls], index[cls]] += cnt

    # joint run-length over the corrected pair
    unmatched_regions: List[Tuple[str, int, int]] = []
    joint = ref_corr * (max(classes) + 2) + test_corr
    for _, s, e in _runs(joint):
        rc, tc = int(ref_corr[s]), int(test_corr[s])
        if none_id is not None and (rc == none_id or tc == none_id):
            continue
        if rc == tc:
            inside_matched = any(cs <= s and e <= ce and cls == rc
                                 for (cs, ce), cls in matched_spans)
            inside_detached = any(cs <= s and e <= ce and cls == rc
                                  for (cs, ce), cls in detached_spans)
            if inside_matched or inside_detached:
                continue  # already accounted for (or deliberately excluded)
            C[index[rc], index[rc]] += 1
        else:
            C[index[rc], index[tc]] += 1
            unmatched_regions.append(
                (f"{class_names[index[rc]]}-{class_names[index[tc]]}", s, e))

    per_kappa, per_f1 = {}, {}
    total = C.sum()
    for c in classes:
        i = index[c]
        if total:
            per_kappa[c] = kappa_from_confusion(_binary_confusion(C, i))
            _, _, per_f1[c] = _prf(C, i)
        else:
            per_kappa[c] = 0.0
            per_f1[c] = 0.0
    kappa = kappa_from_confusion(C) if total else 0.0

    l2_mean, l2_std, or_mean, or_std = {}, {}, {}, {}
    for c in classes:
        vals = [m.l2_ms for m in matched if m.cls == c]
        ors = [m.overlap_ratio for m in matched if m.cls == c]
        if vals:
            l2_mean[c] = float(np.mean(vals))
            l2_std[c] = float(np.std(vals))
            or_mean[c] = float(np.mean(ors))
            or_std[c] = float(np.std(ors))

    unmatched_ref = [ref_events[ei] for ei in range(len(ref_events))
                     if ei not in matched_ids and ei not in detached_ids]

    return ElcReport(C, classes, class_names, kappa, per_kappa, per_f1,
                     matched, unmatched_ref, detached, unmatched_regions,
                     l2_mean, l2_std, or_mean, or_std, ref_corr, test_corr)


def elc_match(ref, test, cfg: ElcConfig = ElcConfig(), rate_hz: float = 300.0,
              none_id: Optional[int] = 0, classes: Optional[Sequence[int]] = None,
              class_names: Optional[Sequence[str]] = None,
              symmetric: bool = False) -> ElcReport:
    """Event Level Cross-category matching.

    One-way by default (classifier vs ground truth); symmetric mode runs both
    directions and averages the summary scores (inter-labeller use).
    """
    r = _as_int_labels(ref)
    t = _as_int_labels(test)
    if r.shape != t.shape:
        raise ValueError("sequences must have equal length")
    if classes is None:
        classes = sorted(set(np.unique(r)) | set(np.unique(t)))
        if none_id is not None and none_id in classes:
            classes.remove(none_id)
    classes = [int(c) for c in classes]
    if class_names is None:
        class_names = [str(c) for c in classes]
    class_names = list(class_names)
    if len(class_names) != len(classes):
        raise ValueError("class_names must align with classes")

    fwd = _elc_one_way(r, t, cfg, rate_hz, none_id, classes, class_names)
    if not symmetric:
        return fwd
    rev = _elc_one_way(t, r, cfg, rate_hz, none_id, classes, class_names)
    avg = ElcReport(
        confusion=(fwd.confusion + rev.confusion.T) / 2.0,
        classes=classes, class_names=class_names,
        kappa=(fwd.kappa + rev.kappa) / 2.0,
        per_class_kappa={c: (fwd.per_class_kappa[c] + rev.per_class_kappa[c]) / 2.0
                         for c in classes},
        per_class_f1={c: (fwd.per_class_f1[c] + rev.per_class_f1[c]) / 2.0
                      for c in classes},
        matched=fwd.matched + rev.matched,
        unmatched_ref=fwd.unmatched_ref,
        detached={c: fwd.detached.get(c, 0) + rev.detached.get(c, 0)
                  for c in set(fwd.detached) | set(rev.detached)},
        unmatched_regions=fwd.unmatched_regions,
        l2_mean_ms={c: float(np.mean([m.l2_ms for m in fwd.matched + rev.matched
                                      if m.cls == c]))
                    for c in classes
                    if any(m.cls == c for m in fwd.matched + rev.matched)},
        l2_std_ms={c: float(np.std([m.l2_ms for m in fwd.matched + rev.matched
                                    if m.cls == c]))
                   for c in classes
                   if any(m.cls == c for m in fwd.matched + rev.matched)},
        overlap_mean={c: float(np.mean([m.overlap_ratio
                                        for m in fwd.matched + rev.matched
                                        if m.cls == c]))
                      for c in classes
                      if any(m.cls == c for m in fwd.matched + rev.matched)},
        overlap_std={c: float(np.std([m.overlap_ratio
                                      for m in fwd.matched + rev.matched
                                      if m.cls == c]))
                     for c in classes
                     if any(m.cls == c for m in fwd.matched + rev.matched)},
        corrected_ref=fwd.corrected_ref,
        corrected_test=fwd.corrected_test,
        reverse=rev)
    return avg
