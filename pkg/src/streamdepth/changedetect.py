"""Contour-drift change detection.

A depth tracker with a floored decaying step follows the stream; every
observation, the current envelopes are compared (by mean contour distance
along a fixed ray fan) against a snapshot from roughly ``lag`` observations
earlier.  Exponential moving averages of that distance and of its square
yield an adaptive threshold mean + scale * sd; a distance at or above the
threshold flags a change, upon which the tracker, the snapshot buffer, the
averages, and the running center all restart.  Snapshots are stored only
every ``snapshot_stride`` observations to bound memory.

The compared distance needs a settled spread estimate to be meaningful, so
detection additionally waits until the averages have absorbed about
1/ema_weight distance values; together with the mute window this suppresses
the startup transient after every restart.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed
from .engine import DepthTracker, TrackerConfig
from .metrics import MetricRays, ed_between_snapshots
from .geometry import sample_uniform_directions
from .quantiles import StepSchedule


@dataclass(frozen=True)
class DetectorParams:
    """Configuration of the contour-drift detector.

    ``lag`` is the comparison distance in observations, ``ema_weight`` the
    exponential averaging weight for the distance statistics,
    ``threshold_scale`` the number of standard deviations above the mean at
    which a change fires, and ``step_floor`` the floor of the tracker's
    decaying step size (so tracking never stops adapting).  ``mute`` disables
    detection — and freezes the distance statistics — for that many
    observations after a restart.  The default, ``warmup + 3*lag``, covers
    the re-convergence of the freshly restarted tracker: distances measured
    while it is still settling run high and trend down, and folding them
    into the averages props the threshold up just when the next change
    needs a level-headed baseline.
    """

    dim: int
    step_floor: float = 0.05
    ema_weight: float = 0.005
    lag: int = 100
    threshold_scale: float = 8.0
    alphas: tuple[float, ...] = (0.01, 0.05, 0.2)
    n_u: int = 20
    direction_mode: str = "uniform"
    warmup: int = 10
    ray_count: int = 64
    snapshot_stride: int = 5
    mute: int | None = None

    def __post_init__(self):
        if not (0.0 < self.step_floor < 1.0):
            raise ValueError(f"step_floor must lie in (0, 1), got {self.step_floor}")
        if not (0.0 < self.ema_weight < 1.0):
            raise ValueError(f"ema_weight must lie in (0, 1), got {self.ema_weight}")
        if self.lag < 1:
            raise ValueError(f"lag must be >= 1, got {self.lag}")
        if self.threshold_scale <= 0.0:
            raise ValueError("threshold_scale must be positive")
        if self.ray_count < 4:
            raise ValueError("need at least 4 comparison rays")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.mute is not None and self.mute < 0:
            raise ValueError("mute must be >= 0")
        # remaining fields are validated by the tracker config
        self.tracker_config(seed=0)

    @property
    def effective_mute(self) -> int:
        return self.warmup + 3 * self.lag if self.mute is None else self.mute

    @property
    def stats_burn_in(self) -> int:
        """Distance samples required before the threshold is trusted."""
        return max(2, math.ceil(1.0 / self.ema_weight))

    def tracker_config(self, seed: int) -> TrackerConfig:
        return TrackerConfig(
            dim=self.dim,
            alphas=self.alphas,
            n_u=self.n_u,
            direction_mode=self.direction_mode,
            schedule=StepSchedule("floored_decay", lam_min=self.step_floor),
            warmup=self.warmup,
            seed=seed,
        )


@dataclass(frozen=True)
class ChangeEvent:
    """One flagged change: the observation index that triggered it, the
    contour distance at that moment, and the threshold it crossed."""

    time: int
    ed: float
    threshold: float


class ChangeDetector:
    """Streaming change detector over depth contours."""

    def __init__(self, params: DetectorParams, seed: int = 0, _start_epoch: int = 0):
        self.params = params
        self.seed = seed
        self._ray_dirs = sample_uniform_directions(
            params.dim, params.ray_count, derive_seed(seed, 1))
        self._t = 0          # observations seen, global
        self._epoch = _start_epoch
        self._restart()

    def _restart(self) -> None:
        p = self.params
        self._tracker = DepthTracker(p.tracker_config(derive_seed(self.seed, 2, self._epoch)))
        self._epoch += 1
        self._t_epoch = 0
        self._snaps: deque[tuple[int, object]] = deque()
        self._ema = 0.0
        self._ema_sq = 0.0
        self._ed_count = 0
        self._center: np.ndarray | None = None

    @property
    def tracker(self) -> DepthTracker:
        return self._tracker

    @property
    def epoch(self) -> int:
        return self._epoch

    @property
    def center(self) -> np.ndarray | None:
        return None if self._center is None else self._center.copy()

    def observe(self, x) -> ChangeEvent | None:
        """Consume one observation; returns an event when a change fires."""
        x = np.asarray(x, dtype=float)
        p = self.params
        self._tracker.observe(x)  # validates; state here untouched on error
        self._t += 1
        self._t_epoch += 1
        if not self._tracker.warmed_up:
            return None
        if self._center is None:
            self._center = x.copy()
        else:
            self._center += p.ema_weight * (x - self._center)

        if (self._t_epoch - p.warmup) % p.snapshot_stride == 0:
            self._snaps.append((self._t_epoch, self._tracker.snapshot()))
        while len(self._snaps) >= 2 and self._t_epoch - self._snaps[1][0] >= p.lag:
            self._snaps.popleft()
        if not self._snaps or self._t_epoch - self._snaps[0][0] < p.lag:
            return None

        rays = MetricRays(self._center, self._ray_dirs)
        try:
            ed = ed_between_snapshots(self._tracker.snapshot(), self._snaps[0][1],
                                      self._center, rays).ed
        except RuntimeError:
            # mid-drift an envelope can pinch empty or move out of ray reach:
            # the contours are torn apart, which is categorical change
            # evidence, far beyond anything a finite threshold measures
            if self._t_epoch > p.effective_mute:
                sd = float(np.sqrt(max(self._ema_sq - self._ema**2, 0.0)))
                threshold = self._ema + p.threshold_scale * sd if self._ed_count else float("inf")
                event = ChangeEvent(time=self._t - 1, ed=float("inf"),
                                    threshold=threshold)
                self._restart()
                return event
            return None
        if self._t_epoch <= p.effective_mute:
            return None  # settling: distances here would poison the averages
        if self._ed_count == 0:
            self._ema = ed
            self._ema_sq = ed * ed
        else:
            w = p.ema_weight
            self._ema += w * (ed - self._ema)
            self._ema_sq += w * (ed * ed - self._ema_sq)
        self._ed_count += 1

        sd = float(np.sqrt(max(self._ema_sq - self._ema * self._ema, 0.0)))
        threshold = self._ema + p.threshold_scale * sd
        armed = self._ed_count >= p.stats_burn_in
        if armed and ed >= threshold:
            event = ChangeEvent(time=self._t - 1, ed=float(ed), threshold=threshold)
            self._restart()
            return event
        return None

    def observe_stream(self, x: np.ndarray) -> list[ChangeEvent]:
        """Feed a block of observations; returns all events fired."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise ValueError("expected a block of observations")
        events = []
        for row in x:
            event = self.observe(row)
            if event is not None:
                events.append(event)
        return events


@dataclass(frozen=True)
class ScoreReport:
    """Detection quality against known change times."""

    precision: float
    recall: float
    f1: float
    mean_delay: float
    n_detections: int
    n_correct: int
    n_true: int


def score_detections(detections, true_changes, horizon: int) -> ScoreReport:
    """Score detection times against true change times.

    The first detection at or after a true change (and before the next one)
    counts as correct with delay detection - change; further detections in
    the same interval, and any before the first change, are false positives.
    Precision is over all detections, recall over all true changes, F1 their
    harmonic mean; empty denominators give 0 by convention.  The mean delay
    is over correct detections only (NaN when there are none).
    """
    detections = [int(d) for d in detections]
    true_changes = [int(c) for c in true_changes]
    if any(b <= a for a, b in zip(detections, detections[1:])):
        raise ValueError("detections must be strictly increasing")
    if any(b <= a for a, b in zip(true_changes, true_changes[1:])):
        raise ValueError("true change times must be strictly increasing")
    for t in detections + true_changes:
        if not (0 <= t < horizon):
            raise ValueError(f"time {t} outside [0, {horizon})")
    credited: set[int] = set()
    delays = []
    for d in detections:
        i = bisect_right(true_changes, d) - 1
        if i >= 0 and i not in credited:
            credited.add(i)
            delays.append(d - true_changes[i])
    n_correct = len(credited)
    precision = n_correct / len(detections) if detections else 0.0
    recall = n_correct / len(true_changes) if true_changes else 0.0
    f1 = (2.0 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    mean_delay = float(np.mean(delays)) if delays else float("nan")
    return ScoreReport(precision=precision, recall=recall, f1=f1,
                       mean_delay=mean_delay, n_detections=len(detections),
                       n_correct=n_correct, n_true=len(true_changes))
