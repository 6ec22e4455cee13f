"""Command-line surface: generate, estimate, track, detect, bench.

Every command reads its parameters from three layers — built-in defaults,
an optional config file, and command-line flags — with later layers
winning.  The config file is either a JSON object or lines of
``key = value`` where each value is a JSON literal (bare words count as
strings); keys match the long flag names with dashes replaced by
underscores.  One top-level ``seed`` fans out to every random component
through counter-based derivation, so reruns of the same configuration
reproduce their statistical output exactly.

All outputs are CSV with declared headers; floats are written in full
round-trip precision.  The exit code is 0 only on success.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from ._rng import derive_seed
from .changedetect import ChangeDetector, DetectorParams, score_detections
from .engine import TrackerConfig
from .experiments import (
    ESTIMATORS,
    _spec_model,
    best_tracking,
    convergence_cell,
    estimate_snapshot,
    evaluate_snapshot,
    tracking_series,
    tune_tracking,
)
from .geometry import contour_polyline_2d
from .metrics import MetricRays
from .oracle import GaussianModel
from .synthdata import (
    StreamSpec,
    ar_covariance,
    default_regimes_2d,
    equicorrelation,
    gen_regime_stream,
    gen_stream,
)

STREAM_KINDS = ("static_gaussian", "static_lognormal", "dynamic_gaussian", "regimes")


class CLIError(Exception):
    """User-facing failure; message is printed without a traceback."""


# ---------------------------------------------------------------------------
# option plumbing
# ---------------------------------------------------------------------------

DEFAULTS: dict[str, dict] = {
    "gen": {
        "kind": "static_gaussian", "dim": 2, "length": 1000, "period": None,
        "mean": None, "cov": None, "length_each": 2000, "count": None,
        "seed": 0, "out": "-",
    },
    "estimate": {
        "input": None, "kind": None, "dim": 2, "length": 1000, "mean": None,
        "cov": None, "estimator": "incremental", "n_dirs": 100,
        "alphas": [0.05, 0.2, 0.4], "warmup": 1000, "ray_count": None,
        "metrics": "auto", "contours_out": None, "contour_resolution": 256,
        "seed": 0, "out": "-",
    },
    "track": {
        "dim": 2, "period": 1000, "n_u": 25, "steps": [0.01, 0.02, 0.05, 0.1],
        "n_seeds": 10, "direction_mode": "uniform", "alphas": [0.05, 0.2, 0.4],
        "eval_count": 10, "ray_count": 200, "burn_periods": 2,
        "run_periods": 4, "seed": 0, "out": "-",
    },
    "detect": {
        "input": None, "format": "auto", "length_each": 2000, "count": None,
        "step_floor": 0.05, "ema_weight": 0.005, "lag": 100,
        "threshold_scale": 8.0, "alphas": [0.01, 0.05, 0.2], "n_u": 20,
        "direction_mode": "uniform", "warmup": 10, "ray_count": 64,
        "snapshot_stride": 5, "mute": None, "report_out": None,
        "seed": 0, "out": "-",
    },
    "bench": {
        "dims": [2, 3], "n_u": [8, 18], "targets": [0.05], "cov": "identity",
        "alphas": [0.05, 0.2, 0.4], "n_seeds": 10, "cap": 1_000_000,
        "warmup": 100, "ray_count": None, "workers": None,
        "seed": 0, "out": "-",
    },
}


def _json_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CLIError(f"cannot read config file: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CLIError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise CLIError("JSON config must be an object of key/value pairs")
        return {str(k).replace("-", "_"): v for k, v in data.items()}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CLIError(f"config line {lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = _json_value(value.strip())
    return out


def merge_options(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then config file, then explicit flags."""
    options = dict(DEFAULTS[command])
    if args.config is not None:
        file_conf = load_config_file(args.config)
        unknown = sorted(set(file_conf) - set(options))
        if unknown:
            raise CLIError(
                f"unknown config keys for '{command}': {', '.join(unknown)} "
                f"(known: {', '.join(sorted(options))})")
        options.update(file_conf)
    for key in options:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            options[key] = flag_value
    return options


def _as_int(options, key) -> int:
    value = options[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) \
            or int(value) != value:
        raise CLIError(f"'{key}' must be an integer, got {value!r}")
    return int(value)

def _as_opt_int(options, key) -> int | None:
    return None if options[key] is None else _as_int(options, key)

def _as_float(options, key) -> float:
    value = options[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CLIError(f"'{key}' must be a number, got {value!r}")
    return float(value)

def _as_float_tuple(options, key) -> tuple[float, ...]:
    value = options[key]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise CLIError(f"'{key}' must be a JSON list of numbers, got {value!r}")
    return tuple(float(v) for v in value)

def _as_int_list(options, key) -> list[int]:
    return [int(v) for v in _as_float_tuple(options, key)]

def _as_choice(options, key, choices) -> str:
    value = options[key]
    if value not in choices:
        raise CLIError(f"'{key}' must be one of {', '.join(choices)}; got {value!r}")
    return value


def parse_cov(value, dim: int) -> np.ndarray | None:
    """Covariance spec: identity (default), ar[:rate], equicorr:rho, or a
    JSON matrix."""
    if value is None or value == "identity":
        return None
    if isinstance(value, str):
        name, _, param = value.partition(":")
        if name == "ar":
            return ar_covariance(dim, float(param)) if param else ar_covariance(dim)
        if name == "equicorr":
            if not param:
                raise CLIError("equicorr covariance needs a correlation: equicorr:RHO")
            return equicorrelation(dim, float(param))
        raise CLIError(f"unknown covariance spec {value!r} "
                       "(identity, ar[:rate], equicorr:rho, or a JSON matrix)")
    matrix = np.asarray(value, dtype=float)
    if matrix.shape != (dim, dim):
        raise CLIError(f"covariance matrix must be {dim}x{dim}")
    return matrix


def parse_mean(value, dim: int) -> np.ndarray | None:
    if value is None:
        return None
    mean = np.asarray(value, dtype=float)
    if mean.shape != (dim,):
        raise CLIError(f"mean must be a JSON list of {dim} numbers")
    return mean


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


@contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
        return
    try:
        handle = open(path, "w", newline="")
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc}") from exc
    with handle:
        yield handle


def write_csv(path: str, header: list[str], rows) -> None:
    with _open_out(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _read_rows(path: str) -> list[list[str]]:
    try:
        with open(path, newline="") as handle:
            return [row for row in csv.reader(handle) if row]
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc


def read_point_csv(path: str) -> tuple[np.ndarray, list[str] | None]:
    """Read `n,x1,...,xp[,label]`; returns (data, labels or None).

    Malformed rows are skipped with a warning count; more than 1% malformed
    aborts, since a stream that damaged cannot be trusted.
    """
    rows = _read_rows(path)
    if not rows:
        raise CLIError(f"{path}: empty input")
    header = [h.strip() for h in rows[0]]
    p = len(header) - 2 if header[-1] == "label" else len(header) - 1
    expected = ["n"] + [f"x{i}" for i in range(1, p + 1)]
    if p < 1 or header[:p + 1] != expected:
        raise CLIError(f"{path}: header must be n,x1,...,xp[,label]")
    labeled = header[-1] == "label"
    data, labels, skipped = [], [], 0
    for row in rows[1:]:
        if len(row) != len(header):
            skipped += 1
            continue
        try:
            coords = [float(v) for v in row[1:p + 1]]
        except ValueError:
            skipped += 1
            continue
        if not all(math.isfinite(c) for c in coords):
            skipped += 1
            continue
        data.append(coords)
        if labeled:
            labels.append(row[-1])
    _check_skipped(path, skipped, len(data))
    if not data:
        raise CLIError(f"{path}: no data rows")
    return np.asarray(data), (labels if labeled else None)


def read_wisdm_csv(path: str) -> tuple[np.ndarray, list[str]]:
    """Accelerometer archive rows `user,activity,timestamp,x,y,z;` — records
    are split on semicolons (several can share a line), the label is the
    user/activity pair."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc
    data, labels, skipped = [], [], 0
    for record in text.replace("\n", ";").split(";"):
        record = record.strip().strip(",")
        if not record:
            continue
        parts = [p.strip() for p in record.split(",")]
        if len(parts) != 6:
            skipped += 1
            continue
        user, activity, _timestamp, *coords = parts
        try:
            vec = [float(c) for c in coords]
        except ValueError:
            skipped += 1
            continue
        if not user or not activity or not all(math.isfinite(c) for c in vec):
            skipped += 1
            continue
        data.append(vec)
        labels.append(f"{user}|{activity}")
    _check_skipped(path, skipped, len(data))
    if not data:
        raise CLIError(f"{path}: no data rows")
    return np.asarray(data), labels


def _check_skipped(path: str, skipped: int, kept: int) -> None:
    total = skipped + kept
    if skipped:
        print(f"warning: {path}: skipped {skipped} malformed row(s)",
              file=sys.stderr)
    if total and skipped > 0.01 * total:
        raise CLIError(f"{path}: {skipped} of {total} rows malformed (> 1%)")


def label_change_points(labels: list[str]) -> list[int]:
    return [i for i in range(1, len(labels))
            if labels[i] != labels[i - 1]]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen(options: dict) -> int:
    kind = _as_choice(options, "kind", STREAM_KINDS)
    seed = _as_int(options, "seed")
    if kind == "regimes":
        regimes = default_regimes_2d()
        length_each = _as_int(options, "length_each")
        count = _as_opt_int(options, "count")
        if count is None:
            count = len(regimes)
        data, _ = gen_regime_stream(regimes, length_each=length_each,
                                    seed=seed, count=count)
        labels = [regimes[b % len(regimes)].name
                  for b in range(count) for _ in range(length_each)]
        header = ["n", "x1", "x2", "label"]
        rows = ([i, *row, labels[i]] for i, row in enumerate(data.tolist()))
    else:
        dim = _as_int(options, "dim")
        spec = StreamSpec(kind, dim=dim, length=_as_int(options, "length"),
                          seed=seed, mean=parse_mean(options["mean"], dim),
                          cov=parse_cov(options["cov"], dim),
                          period=_as_opt_int(options, "period"))
        data = gen_stream(spec)
        header = ["n"] + [f"x{i}" for i in range(1, dim + 1)]
        rows = ([i, *row] for i, row in enumerate(data.tolist()))
    write_csv(options["out"], header, rows)
    return 0


def _estimate_inputs(options: dict):
    """Resolve (data, model, center) from a file or a generator spec."""
    seed = _as_int(options, "seed")
    if options["input"] is not None:
        if options["kind"] is not None:
            raise CLIError("give either --input or a generator --kind, not both")
        data, _ = read_point_csv(options["input"])
        return data, None, np.median(data, axis=0)
    kind = options["kind"] if options["kind"] is not None else "static_gaussian"
    if kind not in ("static_gaussian", "static_lognormal"):
        raise CLIError("estimate needs a static generator kind "
                       "(static_gaussian or static_lognormal)")
    dim = _as_int(options, "dim")
    spec = StreamSpec(kind, dim=dim, length=_as_int(options, "length"),
                      seed=seed, mean=parse_mean(options["mean"], dim),
                      cov=parse_cov(options["cov"], dim))
    data = gen_stream(spec)
    model = _spec_model(spec)
    center = model.mean if isinstance(model, GaussianModel) \
        else np.median(data, axis=0)
    return data, model, center


def cmd_estimate(options: dict) -> int:
    estimator = _as_choice(options, "estimator", ESTIMATORS)
    data, model, center = _estimate_inputs(options)
    seed = _as_int(options, "seed")
    alphas = _as_float_tuple(options, "alphas")

    wanted = _as_choice(options, "metrics", ("auto", "none", "made", "made_ed"))
    available = ("none" if model is None
                 else "made_ed" if isinstance(model, GaussianModel) else "made")
    if wanted == "auto":
        wanted = available
    elif wanted != "none" and (available == "none" or wanted > available):
        limitation = ("file input carries no distribution model, so no depth "
                      "oracle is available" if available == "none" else
                      "the exact contour oracle exists only for normal models; "
                      "this model supports Monte Carlo MADE only")
        raise CLIError(f"requested metrics {wanted!r} are unavailable: {limitation}")

    if len(data) < 10:
        raise CLIError(f"need at least 10 observations, got {len(data)}")
    config = TrackerConfig(dim=data.shape[1], alphas=alphas,
                           n_u=_as_int(options, "n_dirs"),
                           warmup=min(_as_int(options, "warmup"), len(data) // 5),
                           seed=derive_seed(seed, 1))
    snapshot, cpu_s = estimate_snapshot(data, config, estimator)

    header = ["estimator", "n_obs", "alpha", "made", "ed", "cpu_s"]
    rows = []
    if wanted != "none":
        rays = MetricRays.make(center, _as_opt_int(options, "ray_count"),
                               seed=derive_seed(seed, 2))
        report = evaluate_snapshot(snapshot, model, rays)
        with_ed = wanted == "made_ed" and report.ed_per_alpha is not None
        for k, alpha in enumerate(report.alphas):
            rows.append([estimator, len(data), alpha, report.made_per_alpha[k],
                         report.ed_per_alpha[k] if with_ed else None, None])
        rows.append([estimator, len(data), "mean", report.made,
                     report.ed if with_ed else None, cpu_s])
    else:
        rows.append([estimator, len(data), "mean", None, None, cpu_s])
    write_csv(options["out"], header, rows)

    if options["contours_out"] is not None:
        if data.shape[1] != 2:
            raise CLIError("contour export is only defined for 2-d data")
        resolution = _as_int(options, "contour_resolution")
        crows = []
        try:
            for env in snapshot.envelopes:
                for k, (x1, x2) in enumerate(
                        contour_polyline_2d(env, resolution, center).tolist()):
                    crows.append([env.alpha, k, x1, x2])
        except ValueError as exc:
            raise CLIError(f"cannot export contours: {exc}") from exc
        write_csv(options["contours_out"], ["alpha", "vertex", "x1", "x2"], crows)
    return 0


def cmd_track(options: dict) -> int:
    dim = _as_int(options, "dim")
    period = _as_int(options, "period")
    n_u = _as_int(options, "n_u")
    steps = _as_float_tuple(options, "steps")
    alphas = _as_float_tuple(options, "alphas")
    mode = _as_choice(options, "direction_mode", ("uniform", "equidistant"))
    seed = _as_int(options, "seed")
    eval_count = _as_int(options, "eval_count")
    ray_count = _as_int(options, "ray_count")
    burn = _as_int(options, "burn_periods")
    run = _as_int(options, "run_periods")

    if len(steps) == 1:
        # single step: per-checkpoint error along the stream
        spec = StreamSpec("dynamic_gaussian", dim=dim, length=1,
                          seed=derive_seed(seed, 11, 0), period=period)
        config = TrackerConfig(dim=dim, alphas=alphas, n_u=n_u,
                               direction_mode=mode, warmup=period,
                               seed=derive_seed(seed, 12, 0))
        series = tracking_series(spec, config, steps[0], eval_count=eval_count,
                                 ray_count=ray_count, burn_periods=burn,
                                 run_periods=run)
        write_csv(options["out"], ["t", "made"], series)
        return 0

    records = tune_tracking(dim, period, n_u, steps,
                            seeds=range(_as_int(options, "n_seeds")),
                            direction_mode=mode, alphas=alphas,
                            eval_count=eval_count, ray_count=ray_count,
                            seed=seed)
    best = min(records, key=lambda r: r.made)
    write_csv(options["out"],
              ["n_u", "direction_mode", "step", "made", "best"],
              ([r.n_u, r.direction_mode, r.step, r.made, r is best]
               for r in records))
    return 0


def _detect_inputs(options: dict):
    seed = _as_int(options, "seed")
    if options["input"] is None:
        regimes = default_regimes_2d()
        count = _as_opt_int(options, "count")
        data, changes = gen_regime_stream(
            regimes, length_each=_as_int(options, "length_each"),
            seed=seed, count=len(regimes) if count is None else count)
        return data, list(changes)
    fmt = _as_choice(options, "format", ("auto", "labeled", "wisdm"))
    if fmt == "auto":
        fmt = _sniff_format(options["input"])
    if fmt == "wisdm":
        data, labels = read_wisdm_csv(options["input"])
    else:
        data, labels = read_point_csv(options["input"])
        if labels is None:
            raise CLIError("detect needs a labeled stream "
                           "(n,x1,...,xp,label) to derive true change times")
    return data, label_change_points(labels)


def _sniff_format(path: str) -> str:
    try:
        with open(path) as handle:
            for line in handle:
                if line.strip():
                    break
            else:
                line = ""
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc
    first = [f.strip() for f in line.split(",")]
    if first[:2] == ["n", "x1"]:
        return "labeled"
    if len([f for f in line.strip().rstrip(";").split(",") if f]) == 6:
        return "wisdm"
    raise CLIError(f"{path}: cannot infer input format; pass --format")


def cmd_detect(options: dict) -> int:
    data, changes = _detect_inputs(options)
    seed = _as_int(options, "seed")
    params = DetectorParams(
        dim=data.shape[1],
        step_floor=_as_float(options, "step_floor"),
        ema_weight=_as_float(options, "ema_weight"),
        lag=_as_int(options, "lag"),
        threshold_scale=_as_float(options, "threshold_scale"),
        alphas=_as_float_tuple(options, "alphas"),
        n_u=_as_int(options, "n_u"),
        direction_mode=_as_choice(options, "direction_mode",
                                  ("uniform", "equidistant")),
        warmup=_as_int(options, "warmup"),
        ray_count=_as_int(options, "ray_count"),
        snapshot_stride=_as_int(options, "snapshot_stride"),
        mute=_as_opt_int(options, "mute"),
    )
    detector = ChangeDetector(params, seed=derive_seed(seed, 1))
    events = detector.observe_stream(data)
    write_csv(options["out"], ["t", "ed_value", "threshold"],
              ([e.time, e.ed, e.threshold] for e in events))
    report = score_detections([e.time for e in events], changes,
                              horizon=len(data))
    print(f"precision={report.precision!r} recall={report.recall!r} "
          f"f1={report.f1!r} mean_delay={report.mean_delay!r} "
          f"n_detections={report.n_detections} n_correct={report.n_correct} "
          f"n_true={report.n_true}", file=sys.stderr)
    if options["report_out"] is not None:
        write_csv(options["report_out"],
                  ["precision", "recall", "f1", "mean_delay",
                   "n_detections", "n_correct", "n_true"],
                  [[report.precision, report.recall, report.f1,
                    report.mean_delay, report.n_detections, report.n_correct,
                    report.n_true]])
    return 0


def cmd_bench(options: dict) -> int:
    dims = _as_int_list(options, "dims")
    n_us = _as_int_list(options, "n_u")
    targets = _as_float_tuple(options, "targets")
    cov_spec = options["cov"]
    alphas = _as_float_tuple(options, "alphas")
    n_seeds = _as_int(options, "n_seeds")
    cap = _as_int(options, "cap")
    warmup = _as_int(options, "warmup")
    ray_count = _as_opt_int(options, "ray_count")
    seed = _as_int(options, "seed")

    cells = [(dim, n_u, target)
             for dim in dims for n_u in n_us for target in targets]

    def run_cell(index_cell):
        index, (dim, n_u, target) = index_cell
        return convergence_cell(dim, n_u, target, cov=parse_cov(cov_spec, dim),
                                alphas=alphas, n_seeds=n_seeds, cap=cap,
                                warmup=warmup, ray_count=ray_count,
                                seed=derive_seed(seed, 5, index))

    workers = _as_opt_int(options, "workers")
    if workers is None:
        workers = min(len(cells), os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        results = list(pool.map(run_cell, enumerate(cells)))

    write_csv(options["out"],
              ["dim", "n_u", "target_made", "reached", "n_obs",
               "median_made", "cpu_s", "updates_per_ms"],
              ([c.dim, c.n_u, c.target_made, c.reached, c.n_obs,
                c.median_made, c.cpu_s, c.updates_per_ms] for c in results))
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="config file (JSON object or key = value "
                     "lines with JSON literal values); flags override it")
    sub.add_argument("--seed", type=int, help="top-level seed (default 0)")
    sub.add_argument("--out", help="output CSV path, '-' for stdout (default)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamdepth",
        description="Streaming depth contours: generate, estimate, track, "
                    "detect, bench.")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="write a synthetic stream as CSV")
    gen.add_argument("--kind", help=f"one of {', '.join(STREAM_KINDS)}")
    gen.add_argument("--dim", type=int)
    gen.add_argument("--length", type=int)
    gen.add_argument("--period", type=int, help="drift cycle (dynamic kind)")
    gen.add_argument("--mean", type=_json_value, help="JSON list")
    gen.add_argument("--cov", type=_json_value,
                     help="identity | ar[:rate] | equicorr:rho | JSON matrix")
    gen.add_argument("--length-each", type=int, help="rows per regime block")
    gen.add_argument("--count", type=int, help="number of regime blocks")
    _add_common(gen)

    est = commands.add_parser("estimate",
                              help="estimate contours of a fixed sample")
    est.add_argument("--input", help="point CSV n,x1,...,xp[,label]")
    est.add_argument("--kind", help="generator kind when no --input")
    est.add_argument("--dim", type=int)
    est.add_argument("--length", type=int)
    est.add_argument("--mean", type=_json_value)
    est.add_argument("--cov", type=_json_value)
    est.add_argument("--estimator", help="incremental | offline_type8")
    est.add_argument("--n-dirs", type=int, help="direction count")
    est.add_argument("--alphas", type=_json_value, help="JSON list of levels")
    est.add_argument("--warmup", type=int)
    est.add_argument("--ray-count", type=int, help="evaluation rays")
    est.add_argument("--metrics", help="auto | none | made | made_ed")
    est.add_argument("--contours-out", help="polyline CSV (2-d only)")
    est.add_argument("--contour-resolution", type=int)
    _add_common(est)

    trk = commands.add_parser("track", help="follow a drifting stream")
    trk.add_argument("--dim", type=int)
    trk.add_argument("--period", type=int)
    trk.add_argument("--n-u", type=int, help="direction count")
    trk.add_argument("--steps", type=_json_value,
                     help="JSON list; one value = per-checkpoint series, "
                          "several = grid search reporting the best")
    trk.add_argument("--n-seeds", type=int)
    trk.add_argument("--direction-mode", help="uniform | equidistant")
    trk.add_argument("--alphas", type=_json_value)
    trk.add_argument("--eval-count", type=int)
    trk.add_argument("--ray-count", type=int)
    trk.add_argument("--burn-periods", type=int)
    trk.add_argument("--run-periods", type=int)
    _add_common(trk)

    det = commands.add_parser("detect", help="flag contour drift in a stream")
    det.add_argument("--input", help="labeled CSV; omit for the built-in "
                     "synthetic regime stream")
    det.add_argument("--format", help="auto | labeled | wisdm")
    det.add_argument("--length-each", type=int)
    det.add_argument("--count", type=int)
    det.add_argument("--step-floor", type=float)
    det.add_argument("--ema-weight", type=float)
    det.add_argument("--lag", type=int)
    det.add_argument("--threshold-scale", type=float)
    det.add_argument("--alphas", type=_json_value)
    det.add_argument("--n-u", type=int)
    det.add_argument("--direction-mode")
    det.add_argument("--warmup", type=int)
    det.add_argument("--ray-count", type=int)
    det.add_argument("--snapshot-stride", type=int)
    det.add_argument("--mute", type=int)
    det.add_argument("--report-out", help="score CSV path")
    _add_common(det)

    ben = commands.add_parser("bench", help="convergence sweep over a grid")
    ben.add_argument("--dims", type=_json_value, help="JSON list")
    ben.add_argument("--n-u", type=_json_value, help="JSON list")
    ben.add_argument("--targets", type=_json_value, help="JSON list")
    ben.add_argument("--cov", type=_json_value, help="identity | ar[:rate]")
    ben.add_argument("--alphas", type=_json_value)
    ben.add_argument("--n-seeds", type=int)
    ben.add_argument("--cap", type=int)
    ben.add_argument("--warmup", type=int)
    ben.add_argument("--ray-count", type=int)
    ben.add_argument("--workers", type=int)
    _add_common(ben)

    return parser


COMMANDS = {
    "gen": cmd_gen,
    "estimate": cmd_estimate,
    "track": cmd_track,
    "detect": cmd_detect,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        options = merge_options(args.command, args)
        return COMMANDS[args.command](options)
    except (CLIError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
