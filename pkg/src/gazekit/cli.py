"""Command-line front end.

Every failure surfaces as a single JSON object on stderr and a nonzero exit
status, so scripted callers never have to scrape tracebacks.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as gio
from .cleaning import CleaningConfig, clean_labels
from .core import LabelSequence, collapse_labels
from .features import build_feature_matrix
from .forest import ForestConfig, load_forest, save_forest
from .metrics import (ElcConfig, elc_match, event_error_rate, event_f1_earliest,
                      event_kappa_largest, kappa_from_confusion,
                      majority_vote_events, sample_scores)
from .pipeline import (classify_recording_rf, classify_recording_rnn, condition,
                       train_forest_on_recordings, train_rnn_on_recordings)
from .rnn import RnnConfig, load_rnn, save_rnn
from .signal import FilterConfig
from .synth import ScenarioConfig, generate


class CliError(Exception):
    pass


def _load_filter_config(args) -> FilterConfig:
    cfg = gio.load_filter_config(args.filter_config) if args.filter_config \
        else FilterConfig()
    return cfg


def _read_pairs(rec_paths, label_paths, leave_out=None):
    """Paired recordings and labels, optionally excluding one by file stem."""
    if len(rec_paths) != len(label_paths):
        raise CliError("need one --labels per --rec")
    recs, labels, names = [], [], []
    for rp, lp in zip(rec_paths, label_paths):
        stem = Path(rp).stem
        if leave_out is not None and stem == leave_out:
            continue
        rec = gio.read_recording(rp)
        lab = gio.read_labels(lp, n=len(rec))
        if len(lab) != len(rec):
            raise CliError(f"labels in {lp} do not align with {rp}")
        recs.append(rec)
        labels.append(lab)
        names.append(stem)
    if not recs:
        raise CliError("no training pairs left after --leave-out")
    return recs, labels, names


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args):
    cfg = gio.load_scenario_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.duration is not None:
        overrides["duration_s"] = args.duration
    if overrides:
        cfg = replace(cfg, **overrides)
    rec, labels = generate(cfg)
    gio.write_recording(rec, args.out)
    if args.labels:
        gio.write_labels(labels, args.labels)
    print(f"wrote {len(rec)} samples to {args.out}")


def cmd_filter(args):
    rec = gio.read_recording(args.rec)
    trace, _, _ = condition(rec, _load_filter_config(args))
    gio.write_trace(trace, args.out)
    print(f"wrote {len(trace)} velocity samples to {args.out}")


def cmd_features(args):
    rec = gio.read_recording(args.rec)
    trace, eye, head = condition(rec, _load_filter_config(args))
    X, idx, w = build_feature_matrix(trace, eye, head, args.half_window,
                                     confidence=rec.confidence, pad_edges=True)
    with open(args.out, "w") as fh:
        cols = [f"f{i}" for i in range(X.shape[1])]
        fh.write("sample_idx,weight," + ",".join(cols) + "\n")
        for i in range(len(X)):
            row = [str(idx[i]), format(w[i], ".9g")]
            row += [format(v, ".9g") for v in X[i]]
            fh.write(",".join(row) + "\n")
    print(f"wrote {len(X)} feature rows to {args.out}")


def cmd_train_rf(args):
    recs, labels, names = _read_pairs(args.rec, args.labels, args.leave_out)
    cfg = ForestConfig(n_trees=args.trees, min_leaf=args.min_leaf,
                       window_half_s=args.half_window, rng_seed=args.seed,
                       per_split_subsets=args.per_split_subsets)
    model = train_forest_on_recordings(recs, labels, _load_filter_config(args), cfg)
    save_forest(model, args.out)
    print(f"trained forest on {names}; model hash {model.model_hash()[:12]} "
          f"-> {args.out}")


def cmd_train_rnn(args):
    recs, labels, names = _read_pairs(args.rec, args.labels, args.leave_out)
    cfg = RnnConfig(bidirectional=not args.unidirectional, rng_seed=args.seed,
                    epochs=args.epochs)
    model = train_rnn_on_recordings(recs, labels, _load_filter_config(args), cfg,
                                    verbose=args.verbose)
    save_rnn(model, args.out)
    print(f"trained rnn on {names}; final loss "
          f"{model.loss_history[-1]:.4f} -> {args.out}")


def _detect_model(path):
    data = np.load(Path(path), allow_pickle=False)
    header = json.loads(bytes(data["header"]).decode())
    return header.get("format")


def cmd_classify(args):
    rec = gio.read_recording(args.rec)
    fcfg = _load_filter_config(args)
    kind = _detect_model(args.model)
    if kind == "gazekit-forest":
        labels = classify_recording_rf(load_forest(args.model), rec, fcfg)
    elif kind == "gazekit-rnn":
        labels = classify_recording_rnn(load_rnn(args.model), rec, fcfg)
    else:
        raise CliError(f"unrecognized model file {args.model}")
    gio.write_labels(labels, args.out, names=gio.COLLAPSED_NAMES)
    print(f"wrote labels for {len(labels)} samples to {args.out}")


def cmd_clean(args):
    text = Path(args.labels).read_text(encoding="utf-8")
    scheme = gio.label_scheme(text)
    gaze_dirs = None
    rate = args.rate
    n = None
    if args.rec:
        rec = gio.read_recording(args.rec)
        from .geometry import gaze_in_world
        gaze_dirs = gaze_in_world(rec.eye_dir, rec.head_rot)
        rate = rec.rate_hz
        n = len(rec)
    labels = gio.parse_labels(text, n=n)
    ccfg = gio.load_cleaning_config(args.config) if args.config else CleaningConfig()
    if scheme == "collapsed":
        cleaned = clean_labels(labels, gaze_dirs, rate, ccfg,
                               fixation_ids=(1,), saccade_id=3, none_id=0)
        gio.write_labels(cleaned, args.out, names=gio.COLLAPSED_NAMES)
    else:
        cleaned = clean_labels(labels, gaze_dirs, rate, ccfg)
        gio.write_labels(cleaned, args.out, names=gio.CLASS_NAMES)
    print(f"wrote cleaned labels to {args.out}")


def _load_eval_pair(args):
    ref_text = Path(args.ref).read_text(encoding="utf-8")
    test_text = Path(args.test).read_text(encoding="utf-8")
    ref_scheme = gio.label_scheme(ref_text)
    test_scheme = gio.label_scheme(test_text)
    ref = gio.parse_labels(ref_text)
    test = gio.parse_labels(test_text)
    n = max(len(ref), len(test))
    ref = gio.parse_labels(ref_text, n=n)
    test = gio.parse_labels(test_text, n=n)
    collapse = args.collapse or ref_scheme != test_scheme
    if collapse:
        r = collapse_labels(ref.labels) if ref_scheme == "five" else ref.labels
        t = collapse_labels(test.labels) if test_scheme == "five" else test.labels
        names = gio.COLLAPSED_NAMES
        saccade_ids = (3,)
    else:
        r, t = ref.labels, test.labels
        names = gio.COLLAPSED_NAMES if ref_scheme == "collapsed" else gio.CLASS_NAMES
        saccade_ids = (3,) if ref_scheme == "collapsed" else (4,)
    return r, t, names, saccade_ids


def cmd_evaluate(args):
    from . import report as rpt
    r, t, names, saccade_ids = _load_eval_pair(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = {}
    figures = []

    present = sorted(set(np.unique(r)) | set(np.unique(t)) - {0})
    present = [c for c in present if c != 0]
    present_names = [names[c] for c in present]

    if args.metric == "sample":
        sc = sample_scores(r, t)
        rows["kappa"] = sc.kappa
        rows["n_samples"] = sc.n_samples
        for c in sc.classes:
            rows[f"kappa_{names[c]}"] = sc.per_class_kappa[c]
            rows[f"precision_{names[c]}"] = sc.precision[c]
            rows[f"recall_{names[c]}"] = sc.recall[c]
            rows[f"f1_{names[c]}"] = sc.f1[c]
        rpt.plot_confusion(sc.confusion, [names[c] for c in sc.classes],
                           out_dir / "confusion.png", title="sample confusion")
        figures.append("confusion.png")
    elif args.metric == "majority":
        C, classes = majority_vote_events(r, t)
        rows["event_kappa"] = kappa_from_confusion(C) if C.sum() else 0.0
        rows["n_events"] = int(C.sum())
        rpt.plot_confusion(C, [names[c] for c in classes],
                           out_dir / "confusion.png", title="majority-vote events")
        figures.append("confusion.png")
    elif args.metric == "eventf1":
        res = event_f1_earliest(r, t, args.rate)
        for c, er in res.items():
            nm = names[c]
            rows[f"f1_{nm}"] = er.f1
            rows[f"hits_{nm}"] = er.hits
            rows[f"misses_{nm}"] = er.misses
            rows[f"false_alarms_{nm}"] = er.false_alarms
            rows[f"rto_onset_ms_{nm}"] = er.rto_onset_ms
            rows[f"rto_offset_ms_{nm}"] = er.rto_offset_ms
            rows[f"rtd_onset_ms_{nm}"] = er.rtd_onset_ms
            rows[f"rtd_offset_ms_{nm}"] = er.rtd_offset_ms
    elif args.metric == "eventkappa":
        C, kap, classes = event_kappa_largest(r, t)
        rows["event_kappa"] = kap
        rows["n_events"] = int(C.sum())
        rpt.plot_confusion(C, [names[c] for c in classes],
                           out_dir / "confusion.png", title="largest-overlap events")
        figures.append("confusion.png")
    elif args.metric == "eer":
        rows["event_error_rate"] = event_error_rate(r, t)
    elif args.metric == "elc":
        cfg = ElcConfig(saccade_ids=saccade_ids)
        rep = elc_match(r, t, cfg, rate_hz=args.rate, classes=present,
                        class_names=present_names, symmetric=args.symmetric)
        rows["kappa"] = rep.kappa
        rows["l2_mean_ms"] = rep.overall_l2_mean_ms()
        rows["overlap_mean"] = rep.overall_overlap_mean()
        for c in rep.classes:
            nm = names[c]
            rows[f"kappa_{nm}"] = rep.per_class_kappa[c]
            rows[f"f1_{nm}"] = rep.per_class_f1[c]
            if c in rep.l2_mean_ms:
                rows[f"l2_mean_ms_{nm}"] = rep.l2_mean_ms[c]
                rows[f"l2_std_ms_{nm}"] = rep.l2_std_ms[c]
                rows[f"overlap_mean_{nm}"] = rep.overlap_mean[c]
            rows[f"detached_{nm}"] = rep.detached.get(c, 0)
        rpt.plot_confusion(rep.confusion, rep.class_names,
                           out_dir / "confusion.png", title="event-level confusion")
        rpt.plot_elc_timing(rep, out_dir / "timing.png")
        figures += ["confusion.png", "timing.png"]
    else:
        raise CliError(f"unknown metric {args.metric!r}")

    if args.rec:
        rec = gio.read_recording(args.rec)
        trace, _, _ = condition(rec, _load_filter_config(args))
        rpt.plot_trace(trace, out_dir / "trace.png",
                       labels=r[:len(trace)], test_labels=t[:len(trace)])
        figures.append("trace.png")

    table = rpt.metrics_table(rows)
    (out_dir / "metrics.csv").write_text(table, encoding="utf-8")
    doc = {"metric": args.metric, "symmetric": bool(args.symmetric),
           "rate_hz": args.rate, "values": {k: float(v) for k, v in rows.items()},
           "figures": figures}
    (out_dir / "report.json").write_text(json.dumps(doc, indent=2) + "\n",
                                         encoding="utf-8")
    sys.stdout.write(table)
    print(f"report in {out_dir} "
          f"({', '.join(['metrics.csv', 'report.json'] + figures)})")


def cmd_serve(args):
    import uvicorn

    from .service import create_app
    app = create_app(Path(args.data_dir))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gazekit",
                                description="head-free gaze event detection toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def add_filter_opt(sp):
        sp.add_argument("--filter-config", help="TOML conditioning parameters")

    sp = sub.add_parser("synth", help="generate a labelled synthetic recording")
    sp.add_argument("--config", help="TOML scenario parameters")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--duration", type=float)
    sp.add_argument("--out", required=True)
    sp.add_argument("--labels")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("filter", help="velocity trace from a recording")
    sp.add_argument("--rec", required=True)
    add_filter_opt(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_filter)

    sp = sub.add_parser("features", help="window feature matrix")
    sp.add_argument("--rec", required=True)
    add_filter_opt(sp)
    sp.add_argument("--half-window", type=int, default=7)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_features)

    sp = sub.add_parser("train-rf", help="train the random-forest classifier")
    sp.add_argument("--rec", action="append", required=True)
    sp.add_argument("--labels", action="append", required=True)
    sp.add_argument("--leave-out", help="exclude the pair whose recording "
                    "file stem matches")
    add_filter_opt(sp)
    sp.add_argument("--trees", type=int, default=40)
    sp.add_argument("--min-leaf", type=float, default=15.0)
    sp.add_argument("--half-window", type=int, default=7)
    sp.add_argument("--per-split-subsets", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train_rf)

    sp = sub.add_parser("train-rnn", help="train the recurrent classifier")
    sp.add_argument("--rec", action="append", required=True)
    sp.add_argument("--labels", action="append", required=True)
    sp.add_argument("--leave-out")
    add_filter_opt(sp)
    sp.add_argument("--epochs", type=int, default=1000)
    sp.add_argument("--unidirectional", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--verbose", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train_rnn)

    sp = sub.add_parser("classify", help="label a recording with a trained model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--rec", required=True)
    add_filter_opt(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("clean", help="post-process a label file")
    sp.add_argument("--labels", required=True)
    sp.add_argument("--rec", help="recording for gaze-separation checks")
    sp.add_argument("--rate", type=float, default=300.0,
                    help="sample rate when no recording is given")
    sp.add_argument("--config", help="TOML cleaning parameters")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_clean)

    sp = sub.add_parser("evaluate", help="score test labels against a reference")
    sp.add_argument("--ref", required=True)
    sp.add_argument("--test", required=True)
    sp.add_argument("--rate", type=float, default=300.0)
    sp.add_argument("--metric", default="sample",
                    choices=["sample", "majority", "eventf1", "eventkappa",
                             "eer", "elc"])
    sp.add_argument("--symmetric", action="store_true",
                    help="average both matching directions (elc only)")
    sp.add_argument("--collapse", action="store_true",
                    help="score in the 3-class view")
    sp.add_argument("--rec", help="recording for the trace figure")
    add_filter_opt(sp)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("serve", help="run the annotation HTTP service")
    sp.add_argument("--data-dir", required=True)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.set_defaults(func=cmd_serve)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting point
        err = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, gio.FormatError) and exc.line is not None:
            err["line"] = exc.line
        print(json.dumps(err), file=sys.stderr)
        return 2 if isinstance(exc, gio.FormatError) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
