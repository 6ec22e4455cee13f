"""Synthetic stream generators for experiments and tests.

Static streams draw i.i.d. from a fixed multivariate normal or from its
coordinatewise exponential (log-normal).  Dynamic streams draw from a normal
whose mean oscillates per coordinate, mean_i(n) = sin(2*pi*n/period + psi_i),
and whose covariance is an AR(1)-style matrix c(n)^|i-j| with
c(n) = 0.4*sin(2*pi*n/period + psi) + 0.4, all phases drawn uniformly once
per stream.  Time is 0-based: row n of the generated array is a draw from the
parameters at time n.

Regime streams concatenate blocks drawn from a cycle of distinct
distributions (mean shifts, correlation flips, heavier shapes) and are used
to exercise change detection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._rng import derive_rng
from .oracle import GaussianModel

STREAM_KINDS = ("static_gaussian", "static_lognormal", "dynamic_gaussian")

# chunk of observations drawn per batched Cholesky in dynamic generation
_DYNAMIC_CHUNK = 4096


def ar_covariance(dim: int, rate: float = 0.2) -> np.ndarray:
    """Covariance exp(-rate*|i-j|); rate > 0 gives geometric decay."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if rate < 0:
        raise ValueError("rate must be >= 0")
    idx = np.arange(dim)
    return np.exp(-rate * np.abs(idx[:, None] - idx[None, :]))


def equicorrelation(dim: int, rho: float) -> np.ndarray:
    """Unit-variance covariance with constant off-diagonal correlation."""
    if not (-1.0 / max(dim - 1, 1) < rho < 1.0):
        raise ValueError(f"rho={rho} is not positive definite in dimension {dim}")
    return (1.0 - rho) * np.eye(dim) + rho * np.ones((dim, dim))


def gaussian_sampler(mean, cov) -> Callable[[int, np.random.Generator], np.ndarray]:
    """Sampler closure (count, rng) -> draws for a fixed normal."""
    model = GaussianModel(mean, cov)
    return model.sample


def lognormal_sampler(log_mean, log_cov) -> Callable[[int, np.random.Generator], np.ndarray]:
    """Sampler for exp(N(log_mean, log_cov)), applied coordinatewise."""
    base = gaussian_sampler(log_mean, log_cov)

    def draw(count: int, rng: np.random.Generator) -> np.ndarray:
        return np.exp(base(count, rng))

    return draw


@dataclass(frozen=True)
class StreamSpec:
    """Configuration of one synthetic stream.

    ``mean`` defaults to zeros and ``cov`` to the identity.  For the
    log-normal kind both parametrize the underlying normal on log scale.
    ``period`` is required for (and only for) the dynamic kind; the dynamic
    covariance path is checked for positive definiteness over one period at
    construction.
    """

    kind: str
    dim: int
    length: int
    seed: int = 0
    mean: np.ndarray | None = None
    cov: np.ndarray | None = None
    period: int | None = None

    def __post_init__(self):
        if self.kind not in STREAM_KINDS:
            raise ValueError(f"unknown stream kind {self.kind!r}")
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")
        mean = np.zeros(self.dim) if self.mean is None else np.asarray(self.mean, float)
        cov = np.eye(self.dim) if self.cov is None else np.asarray(self.cov, float)
        if mean.shape != (self.dim,) or not np.all(np.isfinite(mean)):
            raise ValueError(f"mean must be a finite vector of length {self.dim}")
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        if self.kind == "dynamic_gaussian":
            if self.period is None or self.period < 2:
                raise ValueError("dynamic streams need period >= 2")
            if self.cov is not None:
                raise ValueError("dynamic streams derive cov from the phase rule")
            object.__setattr__(self, "cov", None)
            for c in dynamic_truth(self).cov_base_at(
                    np.linspace(0, self.period, 64)):
                np.linalg.cholesky(_ar_power(self.dim, c))
        else:
            if self.period is not None:
                raise ValueError("period only applies to dynamic streams")
            GaussianModel(mean, cov)  # validates symmetry and definiteness
            cov.setflags(write=False)
            object.__setattr__(self, "cov", cov)


def _ar_power(dim: int, c: float) -> np.ndarray:
    idx = np.arange(dim)
    return np.float_power(c, np.abs(idx[:, None] - idx[None, :]))


@dataclass(frozen=True)
class DynamicTruth:
    """Time-indexed true parameters of a dynamic stream."""

    dim: int
    period: int
    mean_phases: np.ndarray  # (dim,)
    cov_phase: float
    base_mean: np.ndarray    # (dim,) additive offset

    def mean_at(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        ang = 2.0 * np.pi * n[..., None] / self.period + self.mean_phases
        return self.base_mean + np.sin(ang)

    def cov_base_at(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return 0.4 * np.sin(2.0 * np.pi * n / self.period + self.cov_phase) + 0.4

    def cov_at(self, n: int) -> np.ndarray:
        return _ar_power(self.dim, float(self.cov_base_at(n)))

    def model_at(self, n: int) -> GaussianModel:
        return GaussianModel(self.mean_at(n), self.cov_at(n))


def dynamic_truth(spec: StreamSpec) -> DynamicTruth:
    """Phase draws and parameter paths for a dynamic spec (deterministic)."""
    if spec.kind != "dynamic_gaussian":
        raise ValueError("dynamic_truth requires a dynamic_gaussian spec")
    rng = derive_rng(spec.seed, 1)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=spec.dim + 1)
    return DynamicTruth(dim=spec.dim, period=spec.period,
                        mean_phases=phases[:spec.dim], cov_phase=float(phases[-1]),
                        base_mean=np.asarray(spec.mean, float))


def gen_static(spec: StreamSpec) -> np.ndarray:
    """Materialize a static stream, shape (length, dim)."""
    if spec.kind == "static_gaussian":
        sampler = gaussian_sampler(spec.mean, spec.cov)
    elif spec.kind == "static_lognormal":
        sampler = lognormal_sampler(spec.mean, spec.cov)
    else:
        raise ValueError(f"gen_static cannot generate {spec.kind!r}")
    return sampler(spec.length, derive_rng(spec.seed, 0))


def gen_dynamic(spec: StreamSpec) -> np.ndarray:
    """Materialize a dynamic stream, shape (length, dim); row n uses the
    mean and covariance at time n."""
    if spec.kind != "dynamic_gaussian":
        raise ValueError(f"gen_dynamic cannot generate {spec.kind!r}")
    truth = dynamic_truth(spec)
    rng = derive_rng(spec.seed, 0)
    out = np.empty((spec.length, spec.dim))
    idx = np.arange(spec.length)
    for start in range(0, spec.length, _DYNAMIC_CHUNK):
        n = idx[start:start + _DYNAMIC_CHUNK]
        c = truth.cov_base_at(n)
        covs = np.float_power(
            c[:, None, None],
            np.abs(np.arange(spec.dim)[:, None] - np.arange(spec.dim)[None, :]),
        )
        chol = np.linalg.cholesky(covs)
        z = rng.standard_normal((n.size, spec.dim))
        out[start:start + _DYNAMIC_CHUNK] = (
            truth.mean_at(n) + np.einsum("nij,nj->ni", chol, z)
        )
    return out


def gen_stream(spec: StreamSpec) -> np.ndarray:
    """Materialize any stream kind."""
    if spec.kind == "dynamic_gaussian":
        return gen_dynamic(spec)
    return gen_static(spec)


# ---------------------------------------------------------------------------
# regime streams for change detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Regime:
    name: str
    sampler: Callable[[int, np.random.Generator], np.ndarray]


def _mixture_sampler(means, covs, weights):
    parts = [gaussian_sampler(m, c) for m, c in zip(means, covs)]
    weights = np.asarray(weights, float)

    def draw(count: int, rng: np.random.Generator) -> np.ndarray:
        choice = rng.choice(len(parts), size=count, p=weights)
        out = np.empty((count, len(means[0])))
        for j, part in enumerate(parts):
            rows = np.flatnonzero(choice == j)
            out[rows] = part(rows.size, rng)
        return out

    return draw


def default_regimes_2d() -> list[Regime]:
    """Eight 2-d regimes cycling through mean, correlation, and shape changes."""
    corr = lambda r: np.array([[1.0, r], [r, 1.0]])
    return [
        Regime("base", gaussian_sampler([0.0, 0.0], np.eye(2))),
        Regime("mean_shift", gaussian_sampler([3.0, 3.0], np.eye(2))),
        Regime("correlated", gaussian_sampler([3.0, 3.0], corr(0.85))),
        Regime("lognormal", lognormal_sampler([0.6, 0.6], 0.5 * corr(0.4))),
        Regime("mean_back", gaussian_sampler([0.0, 0.0], np.eye(2))),
        Regime("anticorrelated", gaussian_sampler([0.0, 0.0], corr(-0.85))),
        Regime("inflated", gaussian_sampler([0.0, 0.0], 4.0 * np.eye(2))),
        Regime("bimodal", _mixture_sampler(
            [[-2.0, -2.0], [2.0, 2.0]],
            [0.3 * np.eye(2), 0.3 * np.eye(2)],
            [0.5, 0.5],
        )),
    ]


def gen_regime_stream(regimes, length_each: int, seed: int = 0,
                      count: int | None = None) -> tuple[np.ndarray, tuple[int, ...]]:
    """Concatenate draws from a regime cycle.

    Args:
        regimes: sequence of Regime; reused cyclically when ``count`` exceeds
            its length.
        length_each: observations per regime block.
        seed: master seed; each block gets its own substream.
        count: number of blocks (default: one per regime).

    Returns:
        (data, change_points): data of shape (count*length_each, dim) and the
        0-based indices where a new regime starts (first block excluded).
    """
    regimes = list(regimes)
    if count is None:
        count = len(regimes)
    if count < 1 or length_each < 1:
        raise ValueError("need at least one block and one observation per block")
    blocks = []
    for b in range(count):
        regime = regimes[b % len(regimes)]
        blocks.append(regime.sampler(length_each, derive_rng(seed, 3, b)))
    data = np.vstack(blocks)
    change_points = tuple(b * length_each for b in range(1, count))
    return data, change_points
