"""Streaming estimation of nested depth contours.

A tracker projects every observation onto a fixed set of unit directions and
feeds each projection to a bank of joint quantile estimators, one tracker row
per direction, one column per depth level.  The estimated envelope for level
alpha is the intersection of halfspaces {x : u_i'x >= q_i(alpha)}.

The first ``warmup`` observations are buffered; their projections initialize
the bank with offline quantiles and fix the per-direction positivity offsets.
The step-size schedule starts counting after warm-up.  Every observation
costs one (n_u x dim) projection and one pass over the (n_u x K) bank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed
from .geometry import (
    DepthSnapshot,
    DirectionSet,
    Envelope,
    equidistant_filter,
    point_depth_query,
    sample_uniform_directions,
)
from .quantiles import (
    ORDER_GAP,
    QuantileBank,
    StepSchedule,
    schedule_steps,
)

DIRECTION_MODES = ("uniform", "equidistant")

# observations projected per matmul in observe_many
_BLOCK = 8192

estimate_depth = point_depth_query


@dataclass(frozen=True)
class TrackerConfig:
    """Static configuration of a depth tracker.

    ``alphas`` are the tracked depth levels, strictly increasing, in (0, 1).
    ``n_u`` directions are drawn uniformly, or thinned to an evenly spread
    subset of ``candidate_factor * n_u`` uniform candidates when
    ``direction_mode`` is "equidistant".
    """

    dim: int
    alphas: tuple[float, ...]
    n_u: int
    direction_mode: str = "uniform"
    candidate_factor: int = 10
    schedule: StepSchedule = StepSchedule("decay")
    warmup: int = 10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if len(self.alphas) == 0:
            raise ValueError("need at least one depth level")
        if any(not (0.0 < a < 1.0) for a in self.alphas):
            raise ValueError("depth levels must lie in (0, 1)")
        if any(b <= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise ValueError("depth levels must be strictly increasing")
        if self.n_u < 1:
            raise ValueError(f"n_u must be >= 1, got {self.n_u}")
        if self.direction_mode not in DIRECTION_MODES:
            raise ValueError(f"unknown direction mode {self.direction_mode!r}")
        if self.candidate_factor < 1:
            raise ValueError("candidate_factor must be >= 1")
        if self.warmup < 1:
            raise ValueError(f"warmup must be >= 1, got {self.warmup}")
        if not isinstance(self.schedule, StepSchedule):
            raise ValueError("schedule must be a StepSchedule")


def make_directions(config: TrackerConfig) -> DirectionSet:
    """Direction set a tracker with this config will use (deterministic)."""
    dir_seed = derive_seed(config.seed, 0)
    if config.direction_mode == "uniform":
        return sample_uniform_directions(config.dim, config.n_u, dir_seed)
    candidates = sample_uniform_directions(
        config.dim, config.candidate_factor * config.n_u, dir_seed)
    return equidistant_filter(candidates, config.n_u)


class DepthTracker:
    """Recursive tracker of nested depth envelopes over one stream."""

    def __init__(self, config: TrackerConfig):
        self.config = config
        self.directions = make_directions(config)
        self._u = np.ascontiguousarray(self.directions.vectors)
        self._alphas = np.asarray(config.alphas)
        self._bank: QuantileBank | None = None
        self._warm: list[np.ndarray] = []
        self._sched = config.schedule
        self._n = 0

    @property
    def n_observed(self) -> int:
        return self._n

    @property
    def warmed_up(self) -> bool:
        return self._bank is not None

    @property
    def updates_applied(self) -> int:
        """Total direction-level updates performed (instrumentation)."""
        return 0 if self._bank is None else self._bank.rows_touched

    def _check_block(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.config.dim:
            raise ValueError(f"observations must have dimension {self.config.dim}")
        if not np.all(np.isfinite(x)):
            raise ValueError("observations must be finite")
        return x

    def observe(self, x) -> None:
        """Consume one observation."""
        row = self._check_block(x)
        if row.shape[0] != 1:
            raise ValueError("observe takes a single observation; use observe_many")
        self._consume(row)

    def observe_many(self, x) -> None:
        """Consume a block of observations, in row order.

        The whole block is validated before any state changes, so a rejected
        block leaves the tracker untouched.
        """
        self._consume(self._check_block(x))

    def _consume(self, x: np.ndarray) -> None:
        i = 0
        if self._bank is None:
            need = self.config.warmup - len(self._warm)
            take = min(need, x.shape[0])
            self._warm.extend(x[:take].copy())
            self._n += take
            i = take
            if len(self._warm) == self.config.warmup:
                self._finish_warmup()
        if self._bank is None:
            return
        while i < x.shape[0]:
            block = x[i:i + _BLOCK]
            proj = block @ self._u.T
            steps, self._sched = schedule_steps(self._sched, block.shape[0])
            ups = 1.0 + steps[:, None] * self._alphas
            dns = 1.0 - steps[:, None] * (1.0 - self._alphas)
            bank = self._bank
            for t in range(block.shape[0]):
                bank.apply_factors(proj[t], ups[t], dns[t])
            self._n += block.shape[0]
            i += _BLOCK

    def _finish_warmup(self) -> None:
        buf = np.vstack(self._warm)
        self._warm = []
        proj = buf @ self._u.T
        self._bank = QuantileBank.from_warmup(self.config.alphas, proj, ORDER_GAP)
        self._sched = self.config.schedule  # step counter starts after warm-up

    def snapshot(self) -> DepthSnapshot:
        """Immutable copy of the current envelopes.

        Raises RuntimeError while the tracker is still warming up.
        """
        if self._bank is None:
            raise RuntimeError(
                f"tracker is warming up ({self._n}/{self.config.warmup} "
                "observations); no estimates yet"
            )
        est = self._bank.estimates
        envs = tuple(
            Envelope(self.directions, est[:, k], alpha)
            for k, alpha in enumerate(self.config.alphas)
        )
        return DepthSnapshot(envs, timestamp=self._n)
