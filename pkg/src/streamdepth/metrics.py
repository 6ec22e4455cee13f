"""Accuracy metrics for estimated depth contours.

Both metrics probe an envelope along a fan of rays from a center point.
MADE compares the true depth at the estimated contour crossing against the
nominal level: mean over levels and rays of |alpha - depth(crossing)|.
ED measures the mean Euclidean distance between estimated and true contour
crossings along the same rays.  Rays along which an envelope is unbounded
(or, for a badly placed envelope, missed entirely) are excluded and counted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed
from .geometry import DepthSnapshot, DirectionSet, ray_exit_lengths, sample_uniform_directions


def default_ray_count(dim: int) -> int:
    """Evaluation rays: 10^3 up to dimension 3, 10^4 above."""
    return 1000 if dim <= 3 else 10000


@dataclass(frozen=True)
class MetricRays:
    """A fan of unit rays anchored at a center point."""

    center: np.ndarray
    directions: DirectionSet

    def __post_init__(self):
        # own a copy: freezing a caller's array in place would be a nasty
        # side effect
        center = np.array(self.center, dtype=float)
        if center.ndim != 1 or center.size != self.directions.dim:
            raise ValueError("center dimension must match the ray directions")
        if not np.all(np.isfinite(center)):
            raise ValueError("center must be finite")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)

    @property
    def dim(self) -> int:
        return self.directions.dim

    @classmethod
    def make(cls, center, count: int | None = None, seed: int = 0) -> "MetricRays":
        center = np.asarray(center, dtype=float)
        if count is None:
            count = default_ray_count(center.size)
        dirs = sample_uniform_directions(center.size, count, derive_seed(seed, 4))
        return cls(center, dirs)


@dataclass(frozen=True)
class ErrorReport:
    """Per-level and mean contour errors; either metric may be absent."""

    alphas: tuple[float, ...]
    made_per_alpha: tuple[float, ...] | None = None
    made: float | None = None
    ed_per_alpha: tuple[float, ...] | None = None
    ed: float | None = None
    skipped_rays: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if len(self.alphas) == 0:
            raise ValueError("report needs at least one level")
        for name, mean in (("made_per_alpha", self.made),
                           ("ed_per_alpha", self.ed)):
            per = getattr(self, name)
            if (per is None) != (mean is None):
                raise ValueError("per-level values and their mean must come together")
            if per is None:
                continue
            per = tuple(float(v) for v in per)
            object.__setattr__(self, name, per)
            if len(per) != len(self.alphas):
                raise ValueError("need one value per level")
            if any(v < 0 or not np.isfinite(v) for v in per):
                raise ValueError("errors must be finite and non-negative")
            if abs(mean - sum(per) / len(per)) > 1e-12 * max(1.0, abs(mean)):
                raise ValueError("mean must equal the average of per-level values")
        if self.skipped_rays < 0:
            raise ValueError("skipped_rays must be >= 0")

    def merged(self, other: "ErrorReport") -> "ErrorReport":
        """Combine a MADE-only and an ED-only report over the same levels."""
        if self.alphas != other.alphas:
            raise ValueError("reports cover different levels")
        return ErrorReport(
            alphas=self.alphas,
            made_per_alpha=self.made_per_alpha or other.made_per_alpha,
            made=self.made if self.made is not None else other.made,
            ed_per_alpha=self.ed_per_alpha or other.ed_per_alpha,
            ed=self.ed if self.ed is not None else other.ed,
            skipped_rays=self.skipped_rays + other.skipped_rays,
        )


def _depth_callable(truth):
    if hasattr(truth, "depth"):
        return truth.depth
    if callable(truth):
        return truth
    raise ValueError("truth must be a depth oracle or a callable points -> depths")


def _crossings(envelope, rays: MetricRays) -> tuple[np.ndarray, np.ndarray, int]:
    """Estimated contour crossings along the rays; excluded rays counted."""
    v = rays.directions.vectors
    t, ok = ray_exit_lengths(envelope, rays.center, v)
    skipped = int(np.count_nonzero(~ok))
    if skipped == v.shape[0]:
        raise RuntimeError(
            f"envelope at level {envelope.alpha} has no bounded crossing "
            "along any evaluation ray"
        )
    pts = rays.center + t[ok, None] * v[ok]
    return pts, ok, skipped


def compute_made(snapshot: DepthSnapshot, truth, rays: MetricRays) -> ErrorReport:
    """Mean absolute depth error of a snapshot against a depth oracle.

    Args:
        snapshot: estimated envelopes.
        truth: object with a ``depth(points)`` method or a callable.
        rays: evaluation fan; its center must lie where the true contours
            surround it, typically the true distribution center.

    Returns:
        ErrorReport with the MADE fields set.
    """
    if rays.dim != snapshot.dim:
        raise ValueError("rays and snapshot dimensions differ")
    depth_fn = _depth_callable(truth)
    per = []
    skipped = 0
    for env in snapshot.envelopes:
        pts, _, miss = _crossings(env, rays)
        skipped += miss
        depths = np.asarray(depth_fn(pts), dtype=float)
        per.append(float(np.mean(np.abs(env.alpha - depths))))
    return ErrorReport(alphas=snapshot.alphas, made_per_alpha=tuple(per),
                       made=float(np.mean(per)), skipped_rays=skipped)


def compute_ed(snapshot: DepthSnapshot, model, rays: MetricRays) -> ErrorReport:
    """Mean Euclidean distance between estimated and true contour crossings.

    ``model`` must expose ``contour_intercept(alpha, directions)`` with rays
    emanating from the true center; ``rays.center`` must equal that center.
    """
    if rays.dim != snapshot.dim:
        raise ValueError("rays and snapshot dimensions differ")
    per = []
    skipped = 0
    v = rays.directions.vectors
    for env in snapshot.envelopes:
        pts, ok, miss = _crossings(env, rays)
        skipped += miss
        true_pts = model.contour_intercept(env.alpha, v[ok], center=rays.center)
        per.append(float(np.mean(np.linalg.norm(pts - true_pts, axis=1))))
    return ErrorReport(alphas=snapshot.alphas, ed_per_alpha=tuple(per),
                       ed=float(np.mean(per)), skipped_rays=skipped)


def ed_between_snapshots(a: DepthSnapshot, b: DepthSnapshot, center,
                         rays: MetricRays, center_b=None) -> ErrorReport:
    """Mean crossing distance between two snapshots along a shared ray fan.

    Rays are anchored at ``center`` for both snapshots unless ``center_b``
    is given (useful when comparing contours of a shifted distribution, where
    each snapshot should be probed from its own center).  Rays unbounded or
    missing in either snapshot are excluded from the mean and counted.
    """
    if a.alphas != b.alphas:
        raise ValueError("snapshots track different levels")
    if a.dim != b.dim:
        raise ValueError("snapshots have different dimensions")
    center = np.asarray(center, dtype=float)
    center_b = center if center_b is None else np.asarray(center_b, dtype=float)
    v = rays.directions.vectors
    per = []
    skipped = 0
    for env_a, env_b in zip(a.envelopes, b.envelopes):
        t_a, ok_a = ray_exit_lengths(env_a, center, v)
        t_b, ok_b = ray_exit_lengths(env_b, center_b, v)
        ok = ok_a & ok_b
        skipped += int(np.count_nonzero(~ok))
        if not np.any(ok):
            raise RuntimeError(
                f"no common bounded crossing at level {env_a.alpha}"
            )
        pts_a = center + t_a[ok, None] * v[ok]
        pts_b = center_b + t_b[ok, None] * v[ok]
        per.append(float(np.mean(np.linalg.norm(pts_a - pts_b, axis=1))))
    return ErrorReport(alphas=a.alphas, ed_per_alpha=tuple(per),
                       ed=float(np.mean(per)), skipped_rays=skipped)
