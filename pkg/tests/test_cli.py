"""End-to-end exercises of the command-line interface through main(), checking
exit codes, JSON error reporting, and the artifacts each subcommand writes."""
import json

import numpy as np
import pytest

import gazekit.io as gio
from gazekit.cli import main
from gazekit.synth import ScenarioConfig, generate


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Two short synthetic recordings with labels plus a trained forest."""
    root = tmp_path_factory.mktemp("cli")
    for seed in (0, 1):
        assert main(["synth", "--seed", str(seed), "--duration", "3.0",
                     "--out", str(root / f"rec{seed}.csv"),
                     "--labels", str(root / f"rec{seed}.labels.csv")]) == 0
    assert main(["train-rf",
                 "--rec", str(root / "rec0.csv"),
                 "--labels", str(root / "rec0.labels.csv"),
                 "--rec", str(root / "rec1.csv"),
                 "--labels", str(root / "rec1.labels.csv"),
                 "--trees", "10",
                 "--out", str(root / "forest.npz")]) == 0
    return root


def test_synth_writes_readable_files(workspace):
    rec = gio.read_recording(workspace / "rec0.csv")
    labels = gio.read_labels(workspace / "rec0.labels.csv", n=len(rec))
    assert len(rec) == int(3.0 * rec.rate_hz)
    exp_rec, exp_labels = generate(ScenarioConfig(duration_s=3.0, rng_seed=0))
    assert np.array_equal(labels.labels, exp_labels.labels)


def test_filter_writes_trace(workspace):
    out = workspace / "trace.csv"
    assert main(["filter", "--rec", str(workspace / "rec0.csv"),
                 "--out", str(out)]) == 0
    trace = gio.read_trace(out)
    rec = gio.read_recording(workspace / "rec0.csv")
    assert len(trace) == len(rec)


def test_features_writes_matrix(workspace, tmp_path):
    out = tmp_path / "features.csv"
    assert main(["features", "--rec", str(workspace / "rec0.csv"),
                 "--half-window", "3", "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0].split(",")
    assert header[:2] == ["sample_idx", "weight"]
    assert len(header) == 2 + 6 * 7 + 4


def test_classify_and_evaluate_pipeline(workspace, tmp_path, capsys):
    pred = tmp_path / "pred.labels.csv"
    assert main(["classify", "--model", str(workspace / "forest.npz"),
                 "--rec", str(workspace / "rec0.csv"),
                 "--out", str(pred)]) == 0
    assert gio.label_scheme(pred.read_text()) == "collapsed"

    cleaned = tmp_path / "cleaned.labels.csv"
    assert main(["clean", "--labels", str(pred),
                 "--rec", str(workspace / "rec0.csv"),
                 "--out", str(cleaned)]) == 0

    out_dir = tmp_path / "eval"
    assert main(["evaluate", "--ref", str(workspace / "rec0.labels.csv"),
                 "--test", str(cleaned), "--metric", "sample",
                 "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "metrics.csv").exists()
    assert (out_dir / "confusion.png").exists()
    report = json.loads((out_dir / "report.json").read_text())
    assert report["metric"] == "sample"
    # trained on the evaluated recording itself: should beat chance easily
    assert report["values"]["kappa"] > 0.5
    stdout = capsys.readouterr().out
    assert "kappa" in stdout


def test_evaluate_identical_labels_gives_unit_kappa(workspace, tmp_path):
    out_dir = tmp_path / "eval"
    ref = str(workspace / "rec0.labels.csv")
    assert main(["evaluate", "--ref", ref, "--test", ref,
                 "--out-dir", str(out_dir)]) == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["values"]["kappa"] == pytest.approx(1.0)


def test_evaluate_elc_writes_timing_figure(workspace, tmp_path):
    out_dir = tmp_path / "elc"
    assert main(["evaluate", "--ref", str(workspace / "rec0.labels.csv"),
                 "--test", str(workspace / "rec0.labels.csv"),
                 "--metric", "elc", "--rec", str(workspace / "rec0.csv"),
                 "--out-dir", str(out_dir)]) == 0
    for name in ("confusion.png", "timing.png", "trace.png",
                 "metrics.csv", "report.json"):
        assert (out_dir / name).exists()


@pytest.mark.parametrize("metric", ["majority", "eventf1", "eventkappa", "eer"])
def test_other_metrics_run(workspace, tmp_path, metric):
    out_dir = tmp_path / metric
    assert main(["evaluate", "--ref", str(workspace / "rec0.labels.csv"),
                 "--test", str(workspace / "rec1.labels.csv"),
                 "--metric", metric, "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "metrics.csv").exists()


def test_leave_out_excludes_pair(workspace, tmp_path, capsys):
    out = tmp_path / "f.npz"
    assert main(["train-rf",
                 "--rec", str(workspace / "rec0.csv"),
                 "--labels", str(workspace / "rec0.labels.csv"),
                 "--rec", str(workspace / "rec1.csv"),
                 "--labels", str(workspace / "rec1.labels.csv"),
                 "--leave-out", "rec1", "--trees", "4",
                 "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "rec0" in stdout and "rec1" not in stdout


def test_leave_out_everything_fails(workspace, tmp_path, capsys):
    code = main(["train-rf",
                 "--rec", str(workspace / "rec0.csv"),
                 "--labels", str(workspace / "rec0.labels.csv"),
                 "--leave-out", "rec0",
                 "--out", str(tmp_path / "f.npz")])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "CliError"


def test_malformed_csv_exits_2_with_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(gio.RECORDING_COLUMNS) + ",rate_hz=300\n"
                   "0,0,0,1,1,0,0,0,1\n"
                   "nope\n")
    code = main(["filter", "--rec", str(bad), "--out", str(tmp_path / "t.csv")])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FormatError"
    assert err["line"] == 3


def test_missing_file_exits_1(tmp_path, capsys):
    code = main(["filter", "--rec", str(tmp_path / "absent.csv"),
                 "--out", str(tmp_path / "t.csv")])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FileNotFoundError"


def test_unrecognized_model_file(workspace, tmp_path, capsys):
    model = tmp_path / "junk.npz"
    np.savez(model, header=np.frombuffer(
        json.dumps({"format": "other"}).encode(), dtype=np.uint8))
    code = main(["classify", "--model", str(model),
                 "--rec", str(workspace / "rec0.csv"),
                 "--out", str(tmp_path / "o.csv")])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "CliError"
