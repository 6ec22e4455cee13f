"""Ground-truth depth oracles.

For a Gaussian the halfspace depth of a point has a closed form: the minimum
over directions of P(u'X <= u'w) is attained along the tangent direction of
the density contour through w, and equals Phi(-sqrt(mahalanobis(w))).  For
anything else a Monte Carlo oracle approximates the same minimum over a large
cached sample and a finite set of directions; it is biased upward since the
direction minimum is searched over finitely many candidates.

``tangent_direction_depth`` keeps the tangent-direction computation explicit,
with both plausible normalizations of the projected standard deviation.  The
``projection`` variant (sd over u'X, i.e. sqrt(u'Sigma u)) agrees with the
closed form to rounding; the ``inverse`` variant (sqrt(u'Sigma^-1 u)) does
not, except when Sigma is the identity, and is kept only so a regression test
can document which one the Monte Carlo oracle confirms.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import ndtr, ndtri

from ._rng import derive_rng
from .geometry import DepthSnapshot, DirectionSet, Envelope, sample_uniform_directions

# float64 budget for one projection chunk of the Monte Carlo oracle
_MC_CHUNK_BYTES = 1.0e8


class GaussianModel:
    """Multivariate normal with exact depth and contour geometry."""

    def __init__(self, mean, cov):
        mean = np.asarray(mean, dtype=float)
        cov = np.asarray(cov, dtype=float)
        if mean.ndim != 1 or mean.size < 2:
            raise ValueError("mean must be a vector of dimension >= 2")
        if cov.shape != (mean.size, mean.size):
            raise ValueError("cov must be square and match the mean dimension")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ValueError("mean and cov must be finite")
        if np.max(np.abs(cov - cov.T)) > 1e-10:
            raise ValueError("cov must be symmetric within 1e-10")
        try:
            self._chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("cov must be positive definite") from exc
        self.mean = mean
        self.cov = cov
        self.cov_inv = cho_solve((self._chol, True), np.eye(mean.size))

    @property
    def dim(self) -> int:
        return self.mean.size

    def mahalanobis(self, points: np.ndarray) -> np.ndarray:
        """Mahalanobis distance of one point (p,) or many (m, p)."""
        points = np.asarray(points, dtype=float)
        single = points.ndim == 1
        diff = np.atleast_2d(points) - self.mean
        z = solve_triangular(self._chol, diff.T, lower=True)
        d = np.sqrt(np.sum(z * z, axis=0))
        return d[0] if single else d

    def depth(self, points: np.ndarray) -> np.ndarray:
        """Exact halfspace depth: Phi(-mahalanobis)."""
        return ndtr(-self.mahalanobis(points))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((count, self.dim))
        return self.mean + z @ self._chol.T

    def contour_intercept(self, alpha: float, directions: np.ndarray,
                          center: np.ndarray | None = None) -> np.ndarray:
        """Where rays from the mean cross the alpha-depth contour.

        The alpha-depth region is the mahalanobis ball of radius r with
        Phi(-r) = alpha, so a ray mean + t*d crosses it at
        t = r / sqrt(d' Sigma^-1 d).

        Args:
            alpha: depth level in (0, 0.5).
            directions: one ray direction (p,) or many (m, p); need not be unit.
            center: ray origin; must equal the mean when given.

        Returns:
            Crossing point(s), matching the shape of ``directions``.
        """
        if not (0.0 < alpha < 0.5):
            raise ValueError(f"contour level must lie in (0, 0.5), got {alpha}")
        if center is not None and not np.allclose(center, self.mean, atol=1e-12):
            raise ValueError("contour rays must emanate from the distribution mean")
        directions = np.asarray(directions, dtype=float)
        single = directions.ndim == 1
        d = np.atleast_2d(directions)
        if d.shape[1] != self.dim:
            raise ValueError(f"directions must have dimension {self.dim}")
        r = -ndtri(alpha)
        t = r / np.sqrt(np.einsum("mi,ij,mj->m", d, self.cov_inv, d))
        pts = self.mean + t[:, None] * d
        return pts[0] if single else pts


def mvn_depth(model: GaussianModel, point: np.ndarray) -> float:
    """Exact Gaussian halfspace depth of one point."""
    return float(model.depth(point))


def mvn_contour_intercept(model: GaussianModel, alpha: float, center: np.ndarray,
                          direction: np.ndarray) -> np.ndarray:
    """Ray/contour crossing for a Gaussian; ray must start at the mean."""
    return model.contour_intercept(alpha, direction, center=center)


def tangent_direction_depth(model: GaussianModel, point: np.ndarray,
                            variance: str = "projection") -> float:
    """Depth via the minimizing direction of the contour tangent.

    The direction u = -Sigma^-1 (w - mean), normalized, minimizes
    P(u'X <= u'w); the depth is then Phi((u'w - u'mean) / sd).  ``variance``
    selects the sd normalization: "projection" uses sqrt(u' Sigma u) (the
    distribution of u'X), "inverse" uses sqrt(u' Sigma^-1 u).

    Returns 0.5 at the mean, where every direction ties.
    """
    if variance not in ("projection", "inverse"):
        raise ValueError(f"unknown variance normalization {variance!r}")
    point = np.asarray(point, dtype=float)
    diff = point - model.mean
    g = model.cov_inv @ diff
    norm = np.linalg.norm(g)
    if norm < 1e-300:
        return 0.5
    u = -g / norm
    shift = float(u @ diff)
    if variance == "projection":
        sd = float(np.sqrt(u @ model.cov @ u))
    else:
        sd = float(np.sqrt(u @ model.cov_inv @ u))
    return float(ndtr(shift / sd))


def true_quantile_snapshot(model: GaussianModel, directions: DirectionSet,
                           alphas, timestamp: int = 0) -> DepthSnapshot:
    """Envelope snapshot built from exact directional quantiles.

    The alpha-quantile of u'X is u'mean + ndtri(alpha)*sqrt(u'Sigma u); using
    it for every direction gives the best envelope a direction set can
    express, which is what a converged tracker approaches.
    """
    u = directions.vectors
    loc = u @ model.mean
    scale = np.sqrt(np.einsum("ij,jk,ik->i", u, model.cov, u))
    envs = tuple(
        Envelope(directions, loc + ndtri(a) * scale, a) for a in alphas
    )
    return DepthSnapshot(envs, timestamp=timestamp)


class MonteCarloModel:
    """Depth oracle for arbitrary distributions via a cached sample.

    Args:
        sampler: callable (count, rng) -> (count, p) drawing from the target.
        n_samples: cache size; below 1e4 a warning flags the cache as too
            small to serve as ground truth.
        seed: master seed for the cache substream.
    """

    def __init__(self, sampler, n_samples: int, seed: int = 0):
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if n_samples < 10_000:
            warnings.warn(
                f"Monte Carlo cache of {n_samples} samples is too small to "
                "serve as ground truth",
                RuntimeWarning,
                stacklevel=2,
            )
        samples = np.ascontiguousarray(sampler(n_samples, derive_rng(seed, 0)),
                                       dtype=float)
        if samples.ndim != 2 or samples.shape[0] != n_samples:
            raise ValueError("sampler must return an (n_samples, p) array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("sampler produced non-finite values")
        self.samples = samples

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def depth(self, points: np.ndarray, n_dirs: int = 1000,
              direction_seed: int = 0) -> np.ndarray:
        return mc_depth(self, points, n_dirs, direction_seed=direction_seed)


def mc_depth(model: MonteCarloModel, points: np.ndarray, n_dirs: int,
             direction_seed: int = 0) -> np.ndarray:
    """Monte Carlo halfspace depth: min over sampled directions of the
    empirical fraction of cached samples with u'X <= u'w.

    Deterministic given the cache and the direction seed.  Increasing
    ``n_dirs`` with the same seed only extends the direction set, so the
    result can never increase.

    Args:
        model: sample cache.
        points: one point (p,) or many (m, p).
        n_dirs: number of directions, at least 100.
        direction_seed: seed for the direction substream.

    Returns:
        Depth per point, scalar for a single point.
    """
    if n_dirs < 100:
        raise ValueError(f"need at least 100 directions, got {n_dirs}")
    if model.samples.size == 0:
        raise RuntimeError("Monte Carlo sample cache is empty")
    points = np.asarray(points, dtype=float)
    single = points.ndim == 1
    pts = np.atleast_2d(points)
    if pts.shape[1] != model.dim:
        raise ValueError(f"points must have dimension {model.dim}")
    dirs = sample_uniform_directions(model.dim, n_dirs, direction_seed).vectors
    n = model.samples.shape[0]
    chunk = max(1, int(_MC_CHUNK_BYTES // (8 * n)))
    best = np.ones(pts.shape[0])
    for start in range(0, n_dirs, chunk):
        u = dirs[start:start + chunk]
        proj = model.samples @ u.T          # (n, c)
        proj_w = pts @ u.T                  # (m, c)
        for i in range(pts.shape[0]):
            frac = np.count_nonzero(proj <= proj_w[i], axis=0) / n
            m = frac.min()
            if m < best[i]:
                best[i] = m
    return float(best[0]) if single else best
