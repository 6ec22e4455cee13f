"""Command-line behavior: schemas, determinism, error paths, exit codes."""

import csv
import json
import math

import numpy as np
import pytest

from streamdepth.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def test_gen_writes_declared_header_and_rows(tmp_path):
    out = tmp_path / "s.csv"
    assert run_cli("gen", "--kind", "static_gaussian", "--dim", 3,
                   "--length", 40, "--seed", 5, "--out", out) == 0
    header, rows = read_csv(out)
    assert header == ["n", "x1", "x2", "x3"]
    assert len(rows) == 40
    assert [r[0] for r in rows] == [str(i) for i in range(40)]
    floats = [float(v) for r in rows for v in r[1:]]
    assert all(math.isfinite(v) for v in floats)


def test_gen_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ("gen", "--kind", "dynamic_gaussian", "--dim", 2, "--length", 300,
            "--period", 100, "--seed", 9)
    assert run_cli(*args, "--out", a) == 0
    assert run_cli(*args, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    header, rows = read_csv(a)
    assert header == ["n", "x1", "x2"]
    assert len(rows) == 300


def test_gen_different_seeds_differ(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli("gen", "--length", 20, "--seed", 1, "--out", a) == 0
    assert run_cli("gen", "--length", 20, "--seed", 2, "--out", b) == 0
    assert a.read_bytes() != b.read_bytes()


def test_gen_regime_stream_is_labeled(tmp_path):
    out = tmp_path / "r.csv"
    assert run_cli("gen", "--kind", "regimes", "--length-each", 25,
                   "--count", 3, "--seed", 2, "--out", out) == 0
    header, rows = read_csv(out)
    assert header == ["n", "x1", "x2", "label"]
    assert len(rows) == 75
    labels = [r[-1] for r in rows]
    assert labels[0] == "base" and labels[25] == "mean_shift"
    assert labels[50] == "correlated"


def test_gen_rejects_unwritable_path(tmp_path):
    assert run_cli("gen", "--length", 10,
                   "--out", tmp_path / "missing" / "x.csv") == 1


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def test_estimate_report_schema(tmp_path):
    out = tmp_path / "rep.csv"
    assert run_cli("estimate", "--kind", "static_gaussian", "--dim", 2,
                   "--length", 1500, "--cov", "ar", "--n-dirs", 48,
                   "--seed", 3, "--out", out) == 0
    header, rows = read_csv(out)
    assert header == ["estimator", "n_obs", "alpha", "made", "ed", "cpu_s"]
    assert [r[2] for r in rows] == ["0.05", "0.2", "0.4", "mean"]
    for row in rows:
        assert row[0] == "incremental" and row[1] == "1500"
        assert 0.0 < float(row[3]) < 0.2
        assert 0.0 < float(row[4]) < 0.5
    assert float(rows[-1][5]) > 0.0          # cpu on the summary row only
    assert all(r[5] == "" for r in rows[:-1])


def test_estimate_lognormal_reports_made_only(tmp_path):
    out = tmp_path / "rep.csv"
    assert run_cli("estimate", "--kind", "static_lognormal", "--dim", 2,
                   "--length", 1200, "--estimator", "offline_type8",
                   "--n-dirs", 32, "--ray-count", 64, "--seed", 4,
                   "--out", out) == 0
    _, rows = read_csv(out)
    assert all(r[4] == "" for r in rows)
    assert 0.0 < float(rows[-1][3]) < 0.3


def test_estimate_file_input_has_no_oracle(tmp_path):
    data = tmp_path / "d.csv"
    assert run_cli("gen", "--length", 400, "--seed", 1, "--out", data) == 0
    out = tmp_path / "rep.csv"
    assert run_cli("estimate", "--input", data, "--out", out) == 0
    _, rows = read_csv(out)
    assert len(rows) == 1 and rows[0][2] == "mean"
    assert rows[0][3] == "" and rows[0][4] == ""
    # asking for a metric anyway is an explicit error, not a blank column
    assert run_cli("estimate", "--input", data, "--metrics", "made",
                   "--out", tmp_path / "x.csv") == 1


def test_estimate_zero_length_input_is_a_clean_error(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("n,x1,x2\n")
    assert run_cli("estimate", "--input", empty, "--out", "-") == 1
    truly_empty = tmp_path / "none.csv"
    truly_empty.write_text("")
    assert run_cli("estimate", "--input", truly_empty, "--out", "-") == 1


def test_estimate_contour_export(tmp_path):
    rep, con = tmp_path / "rep.csv", tmp_path / "con.csv"
    assert run_cli("estimate", "--kind", "static_gaussian", "--dim", 2,
                   "--length", 1500, "--n-dirs", 48, "--seed", 3,
                   "--contour-resolution", 64, "--contours-out", con,
                   "--out", rep) == 0
    header, rows = read_csv(con)
    assert header == ["alpha", "vertex", "x1", "x2"]
    assert len(rows) == 3 * 64
    by_level = {}
    for row in rows:
        by_level.setdefault(row[0], []).append((float(row[2]), float(row[3])))
    assert sorted(by_level) == ["0.05", "0.2", "0.4"]
    # deeper levels nest inside shallower ones (compare mean radius)
    radii = {a: np.hypot(*np.mean(np.abs(v), axis=0))
             for a, v in by_level.items()}
    assert radii["0.4"] < radii["0.2"] < radii["0.05"]


def test_estimate_contours_need_two_dimensions(tmp_path):
    assert run_cli("estimate", "--kind", "static_gaussian", "--dim", 3,
                   "--length", 800, "--n-dirs", 32,
                   "--contours-out", tmp_path / "c.csv",
                   "--out", tmp_path / "r.csv") == 1


# ---------------------------------------------------------------------------
# track
# ---------------------------------------------------------------------------

def test_track_single_step_series(tmp_path):
    out = tmp_path / "ts.csv"
    assert run_cli("track", "--dim", 2, "--period", 200, "--n-u", 10,
                   "--steps", 0.1, "--eval-count", 4, "--ray-count", 80,
                   "--seed", 6, "--out", out) == 0
    header, rows = read_csv(out)
    assert header == ["t", "made"]
    assert len(rows) == 4
    assert [int(r[0]) for r in rows] == sorted(int(r[0]) for r in rows)
    assert all(float(r[1]) > 0.0 for r in rows)


def test_track_grid_marks_single_best(tmp_path):
    out = tmp_path / "tg.csv"
    assert run_cli("track", "--dim", 2, "--period", 200, "--n-u", 10,
                   "--steps", "[0.3,0.1]", "--n-seeds", 2, "--eval-count", 3,
                   "--ray-count", 80, "--seed", 6, "--out", out) == 0
    header, rows = read_csv(out)
    assert header == ["n_u", "direction_mode", "step", "made", "best"]
    assert [r[2] for r in rows] == ["0.3", "0.1"]
    best_rows = [r for r in rows if r[4] == "1"]
    assert len(best_rows) == 1
    assert float(best_rows[0][3]) == min(float(r[3]) for r in rows)


# ---------------------------------------------------------------------------
# detect
# ---------------------------------------------------------------------------

def test_detect_labeled_file_equals_builtin_stream(tmp_path, capsys):
    stream = tmp_path / "lab.csv"
    assert run_cli("gen", "--kind", "regimes", "--length-each", 600,
                   "--count", 2, "--seed", 0, "--out", stream) == 0
    ev_a, ev_b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ("detect", "--threshold-scale", 5, "--seed", 0)
    assert run_cli(*common, "--length-each", 600, "--count", 2,
                   "--out", ev_a) == 0
    assert run_cli(*common, "--input", stream, "--out", ev_b) == 0
    assert ev_a.read_bytes() == ev_b.read_bytes()
    header, rows = read_csv(ev_a)
    assert header == ["t", "ed_value", "threshold"]
    assert len(rows) >= 1         # the big mean shift must fire
    assert int(rows[0][0]) >= 600


def test_detect_report_csv_matches_summary(tmp_path, capsys):
    report = tmp_path / "score.csv"
    assert run_cli("detect", "--length-each", 600, "--count", 2,
                   "--threshold-scale", 5, "--seed", 0,
                   "--out", tmp_path / "ev.csv", "--report-out", report) == 0
    printed = capsys.readouterr().err.splitlines()[-1]
    header, rows = read_csv(report)
    assert header == ["precision", "recall", "f1", "mean_delay",
                      "n_detections", "n_correct", "n_true"]
    (row,) = rows
    for name, value in zip(header, row):
        assert f"{name}={value}" in printed
    assert row[-1] == "1"


def test_detect_requires_labels(tmp_path):
    plain = tmp_path / "plain.csv"
    assert run_cli("gen", "--length", 300, "--seed", 1, "--out", plain) == 0
    assert run_cli("detect", "--input", plain, "--out", "-") == 1


def test_detect_reads_wisdm_format(tmp_path, capsys):
    rng = np.random.default_rng(3)
    lines = []
    for i in range(60):
        x, y, z = rng.normal(0.0, 1.0, 3)
        lines.append(f"12,Sitting,{10_000 + i},{x:.3f},{y:.3f},{z:.3f};")
    for i in range(60):
        x, y, z = rng.normal(5.0, 1.0, 3)
        lines.append(f"12,Standing,{20_000 + i},{x:.3f},{y:.3f},{z:.3f};")
    lines.insert(60, "this,row,is,broken")
    path = tmp_path / "wisdm.txt"
    path.write_text("\n".join(lines) + "\n")
    assert run_cli("detect", "--input", path, "--out", "-") == 0
    err = capsys.readouterr().err
    assert "skipped 1 malformed row(s)" in err
    assert "n_true=1" in err


def test_detect_aborts_on_mostly_malformed_input(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1,Walking,5,0.1,0.2,0.3;\ngarbage\n1,Walking,6,0.1,0.2;\n")
    assert run_cli("detect", "--input", path, "--format", "wisdm",
                   "--out", "-") == 1


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def test_bench_grid_schema_and_unconverged_marking(tmp_path):
    out = tmp_path / "b.csv"
    assert run_cli("bench", "--dims", "[2]", "--n-u", "[8,12]",
                   "--targets", "[0.05,0.0001]", "--n-seeds", 2,
                   "--cap", 2000, "--warmup", 30, "--ray-count", 100,
                   "--seed", 0, "--out", out) == 0
    header, rows = read_csv(out)
    assert header == ["dim", "n_u", "target_made", "reached", "n_obs",
                      "median_made", "cpu_s", "updates_per_ms"]
    assert len(rows) == 4
    by_cell = {(r[1], r[2]): r for r in rows}
    assert by_cell[("8", "0.05")][3] == "1"
    hopeless = by_cell[("8", "0.0001")]
    assert hopeless[3] == "0" and hopeless[4] == "2000"
    assert all(float(r[7]) > 0.0 for r in rows)


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def test_config_file_layering(tmp_path):
    conf = tmp_path / "conf.txt"
    conf.write_text("dim = 2\nlength = 40   # rows\nseed = 9\n")
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    assert run_cli("gen", "--config", conf, "--out", a) == 0
    assert len(read_csv(a)[1]) == 40
    # flags beat the file
    assert run_cli("gen", "--config", conf, "--length", 25, "--out", b) == 0
    assert len(read_csv(b)[1]) == 25
    # a JSON config behaves identically
    jconf = tmp_path / "conf.json"
    jconf.write_text(json.dumps({"dim": 2, "length": 40, "seed": 9}))
    assert run_cli("gen", "--config", jconf, "--out", c) == 0
    assert a.read_bytes() == c.read_bytes()


def test_config_rejects_unknown_keys(tmp_path):
    conf = tmp_path / "conf.txt"
    conf.write_text("not_a_real_option = 3\n")
    assert run_cli("gen", "--config", conf, "--out", "-") == 1


def test_invalid_values_exit_nonzero(tmp_path):
    assert run_cli("gen", "--kind", "nonsense", "--out", "-") == 1
    assert run_cli("track", "--steps", "[]", "--out", "-") == 1
    assert run_cli("estimate", "--kind", "dynamic_gaussian",
                   "--out", "-") == 1
