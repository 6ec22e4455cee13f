"""Univariate quantile estimation, streaming and offline.

The streaming estimator keeps O(1) state per tracked quantile level: a single
running estimate that is multiplied by (1 + step*alpha) when a sample lands
above it and by (1 - step*(1 - alpha)) when a sample lands below it.  Ties
leave the estimate unchanged.  In equilibrium the up- and down-moves balance
exactly at the alpha-quantile of the input distribution.

Multiplicative scaling is only meaningful for positive values, so every
tracker carries a fixed positivity offset and performs its updates in shifted
coordinates (estimate + offset).  The offset is chosen once, at warm-up, as
max(0, 1 - min(warm-up samples)), and is never revised afterwards.

Several levels can be tracked jointly over the same stream.  Each level is
updated independently and, whenever the update breaks the ordering across
levels, a minimal L2 repair (pool-adjacent-violators with a small separation
gap) restores strictly increasing estimates.

The offline estimator is the Hyndman & Fan (1996) Type 8 sample quantile,
i.e. the median-unbiased interpolation between consecutive order statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Minimum separation enforced between adjacent level estimates after repair.
ORDER_GAP = 1e-9

SCHEDULE_MODES = ("constant", "decay", "floored_decay")


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------

def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"quantile level must lie in (0, 1), got {alpha}")
    return alpha


def _check_sample(sample: float) -> float:
    sample = float(sample)
    if not math.isfinite(sample):
        raise ValueError(f"sample must be finite, got {sample}")
    return sample


def _check_step(step: float, alphas) -> float:
    """Steps must keep both multiplicative factors strictly positive."""
    step = float(step)
    if not (step > 0.0) or not math.isfinite(step):
        raise ValueError(f"step size must be positive and finite, got {step}")
    amax = np.max(alphas)
    amin = np.min(alphas)
    if step * max(amax, 1.0 - amin) >= 1.0:
        raise ValueError(
            f"step {step} too large for levels in [{amin}, {amax}]: "
            "step * max(alpha, 1 - alpha) must stay below 1"
        )
    return step


# ---------------------------------------------------------------------------
# single-level streaming state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantileState:
    """One streaming quantile estimate in raw (unshifted) coordinates."""

    estimate: float
    alpha: float
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "estimate", float(self.estimate))
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        object.__setattr__(self, "offset", float(self.offset))
        if not math.isfinite(self.estimate) or not math.isfinite(self.offset):
            raise ValueError("estimate and offset must be finite")
        if self.offset < 0.0:
            raise ValueError(f"offset must be >= 0, got {self.offset}")
        if self.estimate + self.offset <= 0.0:
            raise ValueError(
                "estimate + offset must be positive "
                f"(got {self.estimate} + {self.offset})"
            )


def dumique_update(state: QuantileState, sample: float, step: float) -> QuantileState:
    """One multiplicative quantile update (DUMIQE step).

    The shifted estimate q' = estimate + offset moves to q'*(1 + step*alpha)
    if the sample exceeds it, to q'*(1 - step*(1 - alpha)) if the sample falls
    below it, and stays put on a tie.  Comparison happens in shifted
    coordinates, which is equivalent to comparing raw values.

    Args:
        state: current estimate.
        sample: incoming observation (finite).
        step: positive step size with step*max(alpha, 1 - alpha) < 1.

    Returns:
        The updated state; offset and alpha are preserved.
    """
    sample = _check_sample(sample)
    step = _check_step(step, state.alpha)
    shifted = state.estimate + state.offset
    s = sample + state.offset
    if s > shifted:
        shifted = shifted * (1.0 + step * state.alpha)
    elif s < shifted:
        shifted = shifted * (1.0 - step * (1.0 - state.alpha))
    return replace(state, estimate=shifted - state.offset)


# ---------------------------------------------------------------------------
# order repair
# ---------------------------------------------------------------------------

def _pav_nondecreasing(z: np.ndarray) -> np.ndarray:
    """L2 projection of a vector onto the cone of non-decreasing vectors."""
    vals: list[float] = []
    counts: list[int] = []
    for x in z:
        vals.append(float(x))
        counts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, c2 = vals.pop(), counts.pop()
            v1, c1 = vals.pop(), counts.pop()
            vals.append((v1 * c1 + v2 * c2) / (c1 + c2))
            counts.append(c1 + c2)
    return np.repeat(vals, counts)


def restore_order(values: np.ndarray, gap: float = ORDER_GAP) -> np.ndarray:
    """Minimally shift estimates so that values[k+1] >= values[k] + gap.

    Subtracting k*gap turns the gapped ordering constraint into plain
    monotonicity, which pool-adjacent-violators solves with the smallest
    possible L2 displacement.  Already-ordered input is returned unchanged.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("expected a 1-d vector of level estimates")
    if values.size <= 1:
        return values.copy()
    ramp = gap * np.arange(values.size)
    if np.all(np.diff(values) >= gap):
        return values.copy()
    return _pav_nondecreasing(values - ramp) + ramp


# ---------------------------------------------------------------------------
# joint multi-level state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointQuantileState:
    """Jointly tracked estimates for several quantile levels of one stream.

    All levels share the positivity offset.  Estimates are kept strictly
    increasing with a minimum separation of ``gap``.
    """

    alphas: tuple[float, ...]
    estimates: tuple[float, ...]
    offset: float = 0.0
    gap: float = ORDER_GAP

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        estimates = tuple(float(q) for q in self.estimates)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "estimates", estimates)
        object.__setattr__(self, "offset", float(self.offset))
        if len(alphas) == 0:
            raise ValueError("need at least one quantile level")
        if len(alphas) != len(estimates):
            raise ValueError("alphas and estimates must have the same length")
        for a in alphas:
            _check_alpha(a)
        if any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("quantile levels must be strictly increasing")
        if not all(math.isfinite(q) for q in estimates):
            raise ValueError("estimates must be finite")
        if self.offset < 0.0 or not math.isfinite(self.offset):
            raise ValueError(f"offset must be finite and >= 0, got {self.offset}")
        if estimates[0] + self.offset <= 0.0:
            raise ValueError("smallest estimate + offset must be positive")
        if any(b < a for a, b in zip(estimates, estimates[1:])):
            raise ValueError("estimates must be non-decreasing across levels")

    @classmethod
    def initialize(cls, alphas, samples, gap: float = ORDER_GAP) -> "JointQuantileState":
        """Warm-start from a batch: offset from the batch minimum, estimates
        from offline Type 8 quantiles, then order repair."""
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("warm-up batch must be a non-empty 1-d array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("warm-up batch must be finite")
        alphas = tuple(float(a) for a in alphas)
        offset = max(0.0, 1.0 - float(samples.min()))
        y = np.sort(samples)
        raw = _type8_sorted(y[:, None], np.asarray(alphas))[:, 0]
        shifted = restore_order(raw + offset, gap)
        return cls(alphas=alphas, estimates=tuple(shifted - offset),
                   offset=offset, gap=gap)


def joint_update(state: JointQuantileState, sample: float, step: float) -> JointQuantileState:
    """Update every level with the same sample and step, then repair order."""
    sample = _check_sample(sample)
    step = _check_step(step, np.asarray(state.alphas))
    s = sample + state.offset
    shifted = np.array(state.estimates) + state.offset
    for k, alpha in enumerate(state.alphas):
        if s > shifted[k]:
            shifted[k] *= 1.0 + step * alpha
        elif s < shifted[k]:
            shifted[k] *= 1.0 - step * (1.0 - alpha)
    if np.any(np.diff(shifted) < state.gap):
        shifted = restore_order(shifted, state.gap)
    return replace(state, estimates=tuple(shifted - state.offset))


# ---------------------------------------------------------------------------
# step-size schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepSchedule:
    """Step-size sequence for streaming updates.

    Modes: ``constant`` emits ``lam`` forever, ``decay`` emits 1/n, and
    ``floored_decay`` emits max(1/n, lam_min).  The counter n starts at 1.
    """

    mode: str = "decay"
    lam: float = 0.05
    lam_min: float = 0.0
    n: int = 1

    def __post_init__(self):
        if self.mode not in SCHEDULE_MODES:
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.mode == "constant" and not (0.0 < self.lam < 1.0):
            raise ValueError(f"constant step must lie in (0, 1), got {self.lam}")
        if self.mode == "floored_decay" and not (0.0 <= self.lam_min < 1.0):
            raise ValueError(f"step floor must lie in [0, 1), got {self.lam_min}")
        if self.n < 1:
            raise ValueError(f"schedule counter must be >= 1, got {self.n}")


def step_schedule_next(schedule: StepSchedule) -> tuple[float, StepSchedule]:
    """Emit the next step size and the advanced schedule."""
    if schedule.mode == "constant":
        step = schedule.lam
    elif schedule.mode == "decay":
        step = 1.0 / schedule.n
    else:
        step = max(1.0 / schedule.n, schedule.lam_min)
    return step, replace(schedule, n=schedule.n + 1)


def schedule_steps(schedule: StepSchedule, count: int) -> tuple[np.ndarray, StepSchedule]:
    """Emit ``count`` consecutive steps at once (block form of the above)."""
    if count < 0:
        raise ValueError("count must be >= 0")
    ns = np.arange(schedule.n, schedule.n + count, dtype=float)
    if schedule.mode == "constant":
        steps = np.full(count, schedule.lam)
    elif schedule.mode == "decay":
        steps = 1.0 / ns
    else:
        steps = np.maximum(1.0 / ns, schedule.lam_min)
    return steps, replace(schedule, n=schedule.n + count)


# ---------------------------------------------------------------------------
# offline Type 8 quantiles
# ---------------------------------------------------------------------------

def _type8_sorted(sorted_values: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Type 8 quantiles of pre-sorted data.

    Args:
        sorted_values: array of shape (N, ...) sorted along axis 0.
        alphas: quantile levels, shape (K,).

    Returns:
        Array of shape (K, ...): one slice per level.
    """
    n = sorted_values.shape[0]
    h = n * alphas + (alphas + 1.0) / 3.0
    j = np.floor(h).astype(np.int64)
    d = np.where((j < 1) | (j >= n), 0.0, h - j)
    lo = np.clip(j, 1, n) - 1
    hi = np.clip(j + 1, 1, n) - 1
    shape = (alphas.size,) + (1,) * (sorted_values.ndim - 1)
    d = d.reshape(shape)
    return (1.0 - d) * sorted_values[lo] + d * sorted_values[hi]


def offline_quantile_type8(samples, alpha: float) -> float:
    """Median-unbiased (Type 8) sample quantile.

    Interpolates linearly between order statistics at plotting positions
    (k - 1/3) / (N + 1/3); below the first or above the last position the
    extreme order statistic is returned.
    """
    alpha = _check_alpha(alpha)
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.size == 0:
        raise ValueError("samples must be a non-empty 1-d array")
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples must be finite")
    y = np.sort(samples)
    return float(_type8_sorted(y[:, None], np.array([alpha]))[0, 0])


def offline_quantiles_type8(samples: np.ndarray, alphas) -> np.ndarray:
    """Type 8 quantiles per column.

    Args:
        samples: shape (N, M), N observations of M series.
        alphas: K increasing levels.

    Returns:
        Array of shape (M, K).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError("samples must be a non-empty (N, M) array")
    alphas = np.asarray([_check_alpha(a) for a in alphas])
    y = np.sort(samples, axis=0)
    return _type8_sorted(y, alphas).T


# ---------------------------------------------------------------------------
# vectorized bank of joint trackers
# ---------------------------------------------------------------------------

class QuantileBank:
    """Many independent joint quantile trackers updated in lockstep.

    Rows are independent trackers (one per projection direction in the depth
    engine), columns are the shared quantile levels.  State lives in shifted
    coordinates; each row has its own positivity offset.  Semantics per row
    match ``joint_update`` exactly.
    """

    __slots__ = ("alphas", "offsets", "gap", "_shifted", "rows_touched")

    def __init__(self, alphas, estimates: np.ndarray, offsets: np.ndarray,
                 gap: float = ORDER_GAP):
        self.alphas = np.asarray([_check_alpha(a) for a in alphas])
        if self.alphas.ndim != 1 or np.any(np.diff(self.alphas) <= 0):
            raise ValueError("quantile levels must be strictly increasing")
        estimates = np.asarray(estimates, dtype=float)
        offsets = np.asarray(offsets, dtype=float)
        if estimates.ndim != 2 or estimates.shape[1] != self.alphas.size:
            raise ValueError("estimates must have shape (rows, len(alphas))")
        if offsets.shape != (estimates.shape[0],):
            raise ValueError("one offset per row required")
        if np.any(offsets < 0) or not np.all(np.isfinite(offsets)):
            raise ValueError("offsets must be finite and >= 0")
        shifted = estimates + offsets[:, None]
        if not np.all(np.isfinite(shifted)):
            raise ValueError("estimates must be finite")
        if np.any(shifted[:, 0] <= 0):
            raise ValueError("shifted estimates must be positive")
        if estimates.shape[1] > 1 and np.any(np.diff(shifted, axis=1) < 0):
            raise ValueError("estimates must be non-decreasing across levels")
        self.offsets = offsets
        self.gap = float(gap)
        self._shifted = np.ascontiguousarray(shifted)
        self.rows_touched = 0

    @classmethod
    def from_warmup(cls, alphas, samples: np.ndarray, gap: float = ORDER_GAP) -> "QuantileBank":
        """Initialize rows from a warm-up batch of shape (W, rows)."""
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2 or samples.shape[0] == 0:
            raise ValueError("warm-up batch must be a non-empty (W, rows) array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("warm-up batch must be finite")
        alphas = np.asarray([_check_alpha(a) for a in alphas])
        offsets = np.maximum(0.0, 1.0 - samples.min(axis=0))
        raw = offline_quantiles_type8(samples, alphas)
        shifted = raw + offsets[:, None]
        bad = np.flatnonzero(np.any(np.diff(shifted, axis=1) < gap, axis=1))
        for i in bad:
            shifted[i] = restore_order(shifted[i], gap)
        return cls(alphas, shifted - offsets[:, None], offsets, gap)

    @property
    def n_rows(self) -> int:
        return self._shifted.shape[0]

    @property
    def estimates(self) -> np.ndarray:
        """Current estimates in raw coordinates, shape (rows, K)."""
        return self._shifted - self.offsets[:, None]

    def update(self, samples: np.ndarray, step: float) -> None:
        """Feed one observation per row, all rows sharing the step size."""
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (self.n_rows,):
            raise ValueError(f"expected {self.n_rows} samples, got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        step = _check_step(step, self.alphas)
        up = 1.0 + step * self.alphas
        dn = 1.0 - step * (1.0 - self.alphas)
        self.apply_factors(samples, up, dn)

    def apply_factors(self, samples: np.ndarray, up: np.ndarray, dn: np.ndarray) -> None:
        """Update with precomputed factor rows (hot path, no validation)."""
        q = self._shifted
        s = (samples + self.offsets)[:, None]
        np.multiply(q, np.where(s > q, up, np.where(s < q, dn, 1.0)), out=q)
        self.rows_touched += q.shape[0]
        if q.shape[1] > 1:
            d = q[:, 1:] - q[:, :-1]
            if np.any(d < self.gap):
                bad = np.flatnonzero(np.any(d < self.gap, axis=1))
                for i in bad:
                    q[i] = restore_order(q[i], self.gap)

    def row_state(self, i: int) -> JointQuantileState:
        """Scalar view of one row, for inspection and testing."""
        est = self._shifted[i] - self.offsets[i]
        return JointQuantileState(tuple(self.alphas), tuple(est),
                                  offset=float(self.offsets[i]), gap=self.gap)
