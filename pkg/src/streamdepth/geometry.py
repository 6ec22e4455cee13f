"""Direction sets, halfspace envelopes, and depth queries.

An envelope is the intersection of halfspaces {x : u_i'x >= q_i} over a set
of unit directions u_i, where q_i estimates the alpha-quantile of the data
projected onto u_i.  It approximates the alpha-depth region from outside:
fewer directions give a looser polytope.  A depth snapshot stacks envelopes
for several levels, nested by construction because per-direction quantiles
are non-decreasing in alpha.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

# Relative inward nudge applied to polyline vertices so that boundary points
# survive the closed-halfspace containment test despite rounding.
_BOUNDARY_MARGIN = 1e-12


def _as_unit_rows(vectors: np.ndarray) -> np.ndarray:
    # copy unconditionally; these rows get frozen and must not alias input
    vectors = np.array(vectors, dtype=float, order="C")
    if vectors.ndim != 2:
        raise ValueError("directions must form a 2-d array of row vectors")
    n, p = vectors.shape
    if n == 0:
        raise ValueError("direction set must be non-empty")
    if p < 2:
        raise ValueError(f"directions must live in dimension >= 2, got {p}")
    if not np.all(np.isfinite(vectors)):
        raise ValueError("directions must be finite")
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise ValueError("directions must be unit vectors (|norm - 1| <= 1e-12)")
    return vectors


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Immutable set of unit row vectors."""

    vectors: np.ndarray

    def __post_init__(self):
        vectors = _as_unit_rows(self.vectors)
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        if len(vectors) < self.dim + 1:
            warnings.warn(
                f"only {len(vectors)} directions in dimension {self.dim}; "
                "envelopes may be unbounded",
                RuntimeWarning,
                stacklevel=2,
            )

    def __eq__(self, other):
        if not isinstance(other, DirectionSet):
            return NotImplemented
        return np.array_equal(self.vectors, other.vectors)

    __hash__ = None

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def sample_uniform_directions(dim: int, count: int, seed: int) -> DirectionSet:
    """Directions drawn uniformly on the unit sphere.

    Normalized standard Gaussian draws; deterministic for a given seed, and
    the first m vectors of a larger draw coincide with a draw of size m.
    """
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, dim))
    norms = np.linalg.norm(z, axis=1)
    while np.any(norms < 1e-12):  # pragma: no cover - essentially impossible
        bad = norms < 1e-12
        z[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(z, axis=1)
    return DirectionSet(z / norms[:, None])


def _greedy_spread(vectors: np.ndarray, cos_max: float, stop_after: int | None = None):
    """Indices accepted greedily so all pairwise cosines stay <= cos_max."""
    n, p = vectors.shape
    kept = np.empty((n, p))
    idx: list[int] = []
    m = 0
    for i in range(n):
        v = vectors[i]
        if m == 0 or float(np.max(kept[:m] @ v)) <= cos_max:
            kept[m] = v
            idx.append(i)
            m += 1
            if stop_after is not None and m >= stop_after:
                break
    return idx


def equidistant_filter(candidates: DirectionSet, target_count: int) -> DirectionSet:
    """Thin a direction set to roughly evenly spread survivors.

    Binary-searches the largest pairwise angular separation at which a greedy
    sweep (in candidate order) still accepts at least ``target_count``
    vectors, then returns the first ``target_count`` survivors.  Antipodal
    vectors count as far apart: separation is measured by the cosine of the
    angle between vectors, not between lines.
    """
    if not (1 <= target_count <= len(candidates)):
        raise ValueError(
            f"target_count must lie in [1, {len(candidates)}], got {target_count}"
        )
    if target_count == len(candidates):
        return candidates
    v = candidates.vectors
    lo, hi = -1.0, 1.0  # cosine threshold: smaller = farther apart
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if len(_greedy_spread(v, mid)) >= target_count:
            hi = mid
        else:
            lo = mid
    idx = _greedy_spread(v, hi, stop_after=target_count)
    return DirectionSet(v[idx])


@dataclass(frozen=True, eq=False)
class Envelope:
    """Halfspace intersection {x : u_i'x >= q_i for all i} at one depth level."""

    directions: DirectionSet
    quantiles: np.ndarray
    alpha: float

    def __post_init__(self):
        q = np.array(self.quantiles, dtype=float, order="C")
        if q.shape != (len(self.directions),):
            raise ValueError("need exactly one quantile per direction")
        if not np.all(np.isfinite(q)):
            raise ValueError("quantiles must be finite")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        q.setflags(write=False)
        object.__setattr__(self, "quantiles", q)
        object.__setattr__(self, "alpha", float(self.alpha))

    def __eq__(self, other):
        if not isinstance(other, Envelope):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and self.directions == other.directions
            and np.array_equal(self.quantiles, other.quantiles)
        )

    __hash__ = None

    @property
    def dim(self) -> int:
        return self.directions.dim


def envelope_contains(envelope: Envelope, point: np.ndarray) -> bool:
    """Closed-halfspace membership test (boundary counts as inside)."""
    point = np.asarray(point, dtype=float)
    if point.shape != (envelope.dim,):
        raise ValueError(f"point must have shape ({envelope.dim},)")
    proj = envelope.directions.vectors @ point
    return bool(np.all(proj >= envelope.quantiles))


def ray_envelope_intercept(envelope: Envelope, center: np.ndarray,
                           direction: np.ndarray) -> np.ndarray | None:
    """Exit point of a ray from an interior center, or None if unbounded.

    The ray is center + t*direction, t >= 0.  Along it, each halfspace with
    u_i'direction < 0 imposes an upper bound on t; the boundary is met at the
    smallest such bound.  Returns None when no halfspace caps the ray.
    """
    center = np.asarray(center, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if center.shape != (envelope.dim,) or direction.shape != (envelope.dim,):
        raise ValueError(f"center and direction must have shape ({envelope.dim},)")
    if not envelope_contains(envelope, center):
        raise ValueError("center must lie inside the envelope")
    u = envelope.directions.vectors
    den = u @ direction
    capped = den < 0.0
    if not np.any(capped):
        return None
    b = envelope.quantiles[capped] - u[capped] @ center
    t = np.min(b / den[capped])
    return center + t * direction


def ray_exit_lengths(envelope: Envelope, center: np.ndarray,
                     ray_dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outer-boundary crossing parameter of many rays at once.

    For each ray center + t*d, the crossing is the smallest upper bound on t
    imposed by the opposing halfspaces (those with u_i'd < 0) — for a center
    interior to the envelope this is exactly where the ray exits.  The rule
    stays well defined when lag or jitter leaves the center outside, or even
    pinches the envelope empty: it then reads off where the (possibly
    self-intersecting) boundary surface sits along each ray, which is what
    error metrics should measure on a struggling estimate.  Returns (t, ok)
    where ok is False for rays with no crossing ahead of the center
    (unbounded, or boundary behind it).
    """
    u = envelope.directions.vectors
    q = envelope.quantiles
    den = ray_dirs @ u.T                      # (m, n_u)
    b = q - u @ np.asarray(center, dtype=float)  # positive where center violates
    with np.errstate(divide="ignore", invalid="ignore"):
        r = b[None, :] / den
    t = np.where(den < 0.0, r, np.inf).min(axis=1)
    ok = np.isfinite(t) & (t > 0.0)
    return t, ok


@dataclass(frozen=True, eq=False)
class DepthSnapshot:
    """Envelopes for several depth levels sharing one direction set."""

    envelopes: tuple[Envelope, ...]
    timestamp: int = 0

    def __post_init__(self):
        envelopes = tuple(self.envelopes)
        object.__setattr__(self, "envelopes", envelopes)
        if len(envelopes) == 0:
            raise ValueError("snapshot needs at least one envelope")
        first = envelopes[0].directions
        if any(e.directions is not first for e in envelopes[1:]):
            raise ValueError("all envelopes must share one direction set")
        alphas = [e.alpha for e in envelopes]
        if any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("envelope levels must be strictly increasing")
        stacked = np.stack([e.quantiles for e in envelopes])
        if np.any(np.diff(stacked, axis=0) < -1e-9):
            raise ValueError("per-direction quantiles must be non-decreasing in alpha")
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")

    def __eq__(self, other):
        if not isinstance(other, DepthSnapshot):
            return NotImplemented
        return (
            self.timestamp == other.timestamp
            and len(self.envelopes) == len(other.envelopes)
            and all(a == b for a, b in zip(self.envelopes, other.envelopes))
        )

    __hash__ = None

    @property
    def alphas(self) -> tuple[float, ...]:
        return tuple(e.alpha for e in self.envelopes)

    @property
    def directions(self) -> DirectionSet:
        return self.envelopes[0].directions

    @property
    def dim(self) -> int:
        return self.envelopes[0].dim


def point_depth_query(snapshot: DepthSnapshot, point: np.ndarray) -> float:
    """Largest envelope level containing the point, or 0.0 if none.

    Projections onto the shared directions are computed once; levels are
    scanned deepest-first and the scan stops at the first containing level,
    which by nestedness determines the answer.
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (snapshot.dim,):
        raise ValueError(f"point must have shape ({snapshot.dim},)")
    proj = snapshot.directions.vectors @ point
    for env in reversed(snapshot.envelopes):
        if np.all(proj >= env.quantiles):
            return env.alpha
    return 0.0


def point_depths(snapshot: DepthSnapshot, points: np.ndarray) -> np.ndarray:
    """Vectorized point_depth_query over rows of ``points``."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != snapshot.dim:
        raise ValueError(f"points must have shape (m, {snapshot.dim})")
    proj = points @ snapshot.directions.vectors.T
    depths = np.zeros(points.shape[0])
    for env in snapshot.envelopes:  # ascending: deeper levels overwrite
        inside = np.all(proj >= env.quantiles, axis=1)
        depths[inside] = env.alpha
    return depths


def contour_polyline_2d(envelope: Envelope, resolution: int,
                        center: np.ndarray) -> np.ndarray:
    """Boundary polyline of a 2-d envelope, one vertex per ray.

    Rays fan out from the interior center at angles 2*pi*k/resolution.
    Vertices are pulled inward by a relative margin of 1e-12 so they pass the
    closed containment test.  Raises if any ray escapes to infinity.
    """
    if envelope.dim != 2:
        raise ValueError("polyline extraction requires a 2-d envelope")
    if resolution < 3:
        raise ValueError(f"resolution must be >= 3, got {resolution}")
    center = np.asarray(center, dtype=float)
    if not envelope_contains(envelope, center):
        raise ValueError("center must lie inside the envelope")
    angles = 2.0 * np.pi * np.arange(resolution) / resolution
    rays = np.column_stack([np.cos(angles), np.sin(angles)])
    t, ok = ray_exit_lengths(envelope, center, rays)
    if not np.all(ok):
        raise ValueError("envelope is unbounded along some rays")
    t = t * (1.0 - _BOUNDARY_MARGIN)
    return center + t[:, None] * rays
