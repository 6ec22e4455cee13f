"""Experiment runners behind the command-line surface.

Four kinds of study, all returning plain records the CLI serializes to CSV:

* offline-vs-incremental estimation quality on a fixed sample,
* convergence sweeps (observations needed to reach a target accuracy),
* steady-state tracking error on slowly drifting streams, with step tuning,
* change detection on labeled streams.

CPU seconds cover the estimation work only — stream generation and oracle
evaluation are excluded, so timings reflect the estimator, not the harness.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from ._rng import derive_rng, derive_seed
from .changedetect import ChangeDetector, DetectorParams, ScoreReport, score_detections
from .engine import DepthTracker, TrackerConfig, make_directions
from .geometry import DepthSnapshot, Envelope
from .metrics import MetricRays, compute_ed, compute_made, default_ray_count
from .oracle import GaussianModel, MonteCarloModel, mc_depth
from .quantiles import StepSchedule, offline_quantiles_type8
from .synthdata import (
    StreamSpec,
    dynamic_truth,
    gaussian_sampler,
    gen_dynamic,
    gen_static,
    lognormal_sampler,
)

ESTIMATORS = ("incremental", "offline_type8")


def offline_snapshot(data: np.ndarray, directions, alphas,
                     timestamp: int | None = None) -> DepthSnapshot:
    """Envelopes from batch sample quantiles of the projected data."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError("need a (n, dim) sample with n >= 2")
    proj = data @ directions.vectors.T
    q = offline_quantiles_type8(proj, np.asarray(alphas))
    envs = tuple(
        Envelope(directions, q[:, k], alpha) for k, alpha in enumerate(alphas)
    )
    return DepthSnapshot(envs, timestamp=len(data) if timestamp is None else timestamp)


def estimate_snapshot(data: np.ndarray, config: TrackerConfig,
                      estimator: str) -> tuple[DepthSnapshot, float]:
    """Run one estimator over a fixed sample; returns (snapshot, cpu_s)."""
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; options: {ESTIMATORS}")
    if estimator == "offline_type8":
        directions = make_directions(config)
        start = time.perf_counter()
        snap = offline_snapshot(data, directions, config.alphas)
        return snap, time.perf_counter() - start
    tracker = DepthTracker(config)
    start = time.perf_counter()
    tracker.observe_many(data)
    cpu = time.perf_counter() - start
    return tracker.snapshot(), cpu


@dataclass(frozen=True)
class EstimateRecord:
    """Quality and cost of one estimator on one sample."""

    estimator: str
    n_obs: int
    made: float
    ed: float | None
    cpu_s: float


def _spec_model(spec: StreamSpec) -> GaussianModel | MonteCarloModel:
    mean = np.zeros(spec.dim) if spec.mean is None else np.asarray(spec.mean)
    cov = np.eye(spec.dim) if spec.cov is None else np.asarray(spec.cov)
    if spec.kind == "static_gaussian":
        return GaussianModel(mean, cov)
    if spec.kind == "static_lognormal":
        return MonteCarloModel(lognormal_sampler(mean, cov),
                               n_samples=200_000, seed=derive_seed(spec.seed, 6))
    raise ValueError(f"no static oracle for stream kind {spec.kind!r}")


def evaluate_snapshot(snapshot: DepthSnapshot, model, rays: MetricRays,
                      mc_dirs: int = 1000):
    """MADE (and ED when the oracle is analytic) of a snapshot.

    Gaussian models give both metrics; sampling-based oracles support only
    MADE, through the direction-minimization depth.
    """
    if isinstance(model, GaussianModel):
        return compute_made(snapshot, model, rays).merged(
            compute_ed(snapshot, model, rays))
    return compute_made(
        snapshot, lambda pts: mc_depth(model, pts, n_dirs=mc_dirs), rays)


def compare_estimators(spec: StreamSpec, n_dirs: int, alphas=(0.05, 0.2, 0.4),
                       ray_count: int | None = None,
                       warmup: int = 1000) -> list[EstimateRecord]:
    """Offline and incremental estimates of the same sample, same directions.

    The incremental run spends ``warmup`` observations (capped at a fifth
    of the sample) on initialization.  The decaying schedule rewinds to
    full strength after warm-up, and those first near-unit steps throw a
    sector of directions far off before the decay tames them, so a
    generous warm-up batch buys a visibly steadier comparison.
    """
    data = gen_static(spec)
    model = _spec_model(spec)
    config = TrackerConfig(dim=spec.dim, alphas=tuple(alphas), n_u=n_dirs,
                           seed=spec.seed, warmup=min(warmup, len(data) // 5))
    center = model.mean if isinstance(model, GaussianModel) else np.median(data, axis=0)
    rays = MetricRays.make(center, ray_count, seed=spec.seed)
    out = []
    for estimator in ESTIMATORS:
        snap, cpu = estimate_snapshot(data, config, estimator)
        report = evaluate_snapshot(snap, model, rays)
        out.append(EstimateRecord(estimator=estimator, n_obs=len(data),
                                  made=report.made, ed=report.ed, cpu_s=cpu))
    return out


# ---------------------------------------------------------------------------
# convergence sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceCell:
    """Observations needed for the median seed to reach a target accuracy."""

    dim: int
    n_u: int
    target_made: float
    reached: bool
    n_obs: int
    median_made: float
    cpu_s: float            # mean estimation time per seed
    updates_per_ms: float   # envelope refreshes (observations x levels) per ms


def _checkpoint_ladder(start: int, cap: int) -> list[int]:
    points = []
    n = start
    while n < cap:
        points.append(n)
        n *= 2
    points.append(cap)
    return points


def convergence_cell(dim: int, n_u: int, target_made: float,
                     cov: np.ndarray | None = None,
                     alphas=(0.05, 0.2, 0.4), n_seeds: int = 10,
                     cap: int = 10**6, warmup: int = 100,
                     ray_count: int | None = None, seed: int = 0) -> ConvergenceCell:
    """Advance one tracker per seed in lockstep until the median MADE of a
    shared checkpoint drops below the target (or the observation cap)."""
    mean = np.zeros(dim)
    cov = np.eye(dim) if cov is None else np.asarray(cov, dtype=float)
    model = GaussianModel(mean, cov)
    sampler = gaussian_sampler(mean, cov)
    rays = MetricRays.make(mean, ray_count, seed=seed)
    alphas = tuple(alphas)

    trackers, rngs = [], []
    for s in range(n_seeds):
        config = TrackerConfig(dim=dim, alphas=alphas, n_u=n_u, warmup=warmup,
                               seed=derive_seed(seed, 7, s))
        trackers.append(DepthTracker(config))
        rngs.append(derive_rng(seed, 8, s))

    cpu = np.zeros(n_seeds)
    done = 0
    for checkpoint in _checkpoint_ladder(max(2 * warmup, 128), cap):
        block = checkpoint - done
        for s, (tracker, rng) in enumerate(zip(trackers, rngs)):
            chunk = sampler(block, rng)
            start = time.perf_counter()
            tracker.observe_many(chunk)
            cpu[s] += time.perf_counter() - start
        done = checkpoint
        made = np.median([compute_made(t.snapshot(), model, rays).made
                          for t in trackers])
        if made < target_made:
            break
    total_ms = 1000.0 * float(np.sum(cpu))
    return ConvergenceCell(
        dim=dim, n_u=n_u, target_made=target_made,
        reached=bool(made < target_made), n_obs=done,
        median_made=float(made), cpu_s=float(np.mean(cpu)),
        updates_per_ms=n_seeds * done * len(alphas) / total_ms,
    )


def measure_throughput(dim: int = 5, n_u: int = 50, alphas=(0.05, 0.2, 0.4),
                       n_obs: int = 50_000, seed: int = 0) -> float:
    """Envelope refreshes per millisecond of steady-state tracking."""
    config = TrackerConfig(dim=dim, alphas=tuple(alphas), n_u=n_u, seed=seed)
    tracker = DepthTracker(config)
    rng = derive_rng(seed, 9)
    tracker.observe_many(rng.standard_normal((config.warmup, dim)))
    data = rng.standard_normal((n_obs, dim))
    start = time.perf_counter()
    tracker.observe_many(data)
    elapsed_ms = 1000.0 * (time.perf_counter() - start)
    return n_obs * len(config.alphas) / elapsed_ms


# ---------------------------------------------------------------------------
# drift tracking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrackingRecord:
    """Steady-state tracking error for one configuration."""

    n_u: int
    direction_mode: str
    step: float
    made: float             # median over seeds of the per-run mean


def tracking_series(spec: StreamSpec, config: TrackerConfig, step: float,
                    eval_count: int = 20, ray_count: int | None = None,
                    burn_periods: int = 2,
                    run_periods: int = 4) -> list[tuple[int, float]]:
    """Per-checkpoint MADE of one tracker run against the moving truth.

    The stream runs ``run_periods`` full drift cycles; MADE is taken at
    ``eval_count`` instants spread across the cycles after the first
    ``burn_periods`` (transient of the constant-step estimator).  An instant
    whose contours are torn (no bounded crossing along any ray) scores as
    infinite error rather than an exception: callers should rank such a
    configuration last, not die on it.
    """
    if spec.period is None:
        raise ValueError("tracking experiments need a drifting stream spec")
    if not 0 <= burn_periods < run_periods:
        raise ValueError("need at least one period after burn-in")
    spec = replace(spec, length=run_periods * spec.period)
    data = gen_dynamic(spec)
    truth = dynamic_truth(spec)
    config = replace(config, dim=spec.dim,
                     schedule=StepSchedule("constant", lam=step))
    tracker = DepthTracker(config)
    ray_dirs = MetricRays.make(np.zeros(spec.dim), ray_count,
                               seed=derive_seed(spec.seed, 10)).directions
    eval_times = np.linspace(burn_periods * spec.period, spec.length,
                             eval_count, dtype=int)
    series = []
    done = 0
    for t in eval_times:
        tracker.observe_many(data[done:t])
        done = int(t)
        model = truth.model_at(done - 1)
        rays = MetricRays(model.mean, ray_dirs)
        try:
            made = compute_made(tracker.snapshot(), model, rays).made
        except RuntimeError:
            made = float("inf")
        series.append((done, made))
    return series


def tracking_error(spec: StreamSpec, config: TrackerConfig, step: float,
                   eval_count: int = 20, ray_count: int | None = None,
                   burn_periods: int = 2, run_periods: int = 4) -> float:
    """Mean MADE over the checkpoints of ``tracking_series`` (inf if any
    checkpoint is torn)."""
    series = tracking_series(spec, config, step, eval_count=eval_count,
                             ray_count=ray_count, burn_periods=burn_periods,
                             run_periods=run_periods)
    return float(np.mean([made for _, made in series]))


def tune_tracking(dim: int, period: int, n_u: int, steps, seeds,
                  direction_mode: str = "uniform", alphas=(0.05, 0.2, 0.4),
                  eval_count: int = 10, ray_count: int = 200,
                  seed: int = 0) -> list[TrackingRecord]:
    """Median tracking error per candidate step size.

    Warm-up spans one full drift cycle: the positivity offsets freeze at
    warm-up, and offsets fitted to a sliver of the orbit leave quantile
    rows pinned above values the stream later visits, tearing the
    envelopes apart.
    """
    records = []
    for step in steps:
        made = []
        for s in seeds:
            spec = StreamSpec("dynamic_gaussian", dim=dim, length=1,
                              seed=derive_seed(seed, 11, s), period=period)
            config = TrackerConfig(dim=dim, alphas=tuple(alphas), n_u=n_u,
                                   direction_mode=direction_mode, warmup=period,
                                   seed=derive_seed(seed, 12, s))
            made.append(tracking_error(spec, config, step,
                                       eval_count=eval_count,
                                       ray_count=ray_count))
        records.append(TrackingRecord(n_u=n_u, direction_mode=direction_mode,
                                      step=float(step),
                                      made=float(np.median(made))))
    return records


def best_tracking(dim: int, period: int, n_u: int, steps, seeds,
                  direction_mode: str = "uniform", **kwargs) -> TrackingRecord:
    records = tune_tracking(dim, period, n_u, steps, seeds,
                            direction_mode=direction_mode, **kwargs)
    return min(records, key=lambda r: r.made)


# ---------------------------------------------------------------------------
# change detection
# ---------------------------------------------------------------------------

def detection_run(data: np.ndarray, change_points, params: DetectorParams,
                  seed: int = 0) -> tuple[list, ScoreReport]:
    """Run the detector over a stream and score against known change times."""
    detector = ChangeDetector(params, seed=seed)
    events = detector.observe_stream(np.asarray(data, dtype=float))
    report = score_detections([e.time for e in events], list(change_points),
                              horizon=len(data))
    return events, report
