"""Direction sets, envelopes, depth queries, and contour extraction."""

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from streamdepth.geometry import (
    DepthSnapshot,
    DirectionSet,
    Envelope,
    contour_polyline_2d,
    envelope_contains,
    equidistant_filter,
    point_depth_query,
    point_depths,
    ray_envelope_intercept,
    ray_exit_lengths,
    sample_uniform_directions,
)


def unit_box_envelope(alpha=0.1):
    dirs = DirectionSet(np.array([[1.0, 0.0], [-1.0, 0.0],
                                  [0.0, 1.0], [0.0, -1.0]]))
    return Envelope(dirs, np.full(4, -1.0), alpha)


def random_snapshot(rng, dim=2, n_u=8, n_levels=3):
    """Valid random snapshot: per-direction quantiles non-decreasing in level."""
    vecs = rng.normal(size=(n_u, dim))
    vecs /= np.linalg.norm(vecs, axis=1)[:, None]
    dirs = DirectionSet(vecs)
    base = rng.normal(-2.0, 0.5, size=n_u)
    steps = np.abs(rng.normal(0.5, 0.3, size=(n_levels - 1, n_u)))
    quants = np.vstack([base, base + np.cumsum(steps, axis=0)])
    alphas = np.sort(rng.uniform(0.01, 0.99, size=n_levels))
    while np.any(np.diff(alphas) <= 0):
        alphas = np.sort(rng.uniform(0.01, 0.99, size=n_levels))
    envs = tuple(Envelope(dirs, quants[k], alphas[k]) for k in range(n_levels))
    return DepthSnapshot(envs)


# ---------------------------------------------------------------------------
# direction sampling
# ---------------------------------------------------------------------------

def test_sampled_directions_are_unit():
    ds = sample_uniform_directions(3, 100, seed=0)
    norms = np.linalg.norm(ds.vectors, axis=1)
    assert np.all(np.abs(norms - 1.0) <= 1e-12)


def test_sampling_is_deterministic():
    a = sample_uniform_directions(4, 64, seed=123)
    b = sample_uniform_directions(4, 64, seed=123)
    assert np.array_equal(a.vectors, b.vectors)


def test_sampling_extends_by_prefix():
    # a longer draw with the same seed starts with the shorter draw, which
    # makes direction-count refinement monotone
    small = sample_uniform_directions(3, 50, seed=9)
    large = sample_uniform_directions(3, 200, seed=9)
    assert np.array_equal(large.vectors[:50], small.vectors)


def test_planar_angles_are_uniform():
    # chi-squared over 8 angular bins, 1e5 draws; 1% critical value for
    # 7 degrees of freedom is 18.475
    ds = sample_uniform_directions(2, 100_000, seed=77)
    angles = np.arctan2(ds.vectors[:, 1], ds.vectors[:, 0])
    counts, _ = np.histogram(angles, bins=8, range=(-np.pi, np.pi))
    expected = 100_000 / 8
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    assert chi2 < 18.475


def test_sampling_rejects_bad_parameters():
    with pytest.raises(ValueError):
        sample_uniform_directions(1, 10, seed=0)
    with pytest.raises(ValueError):
        sample_uniform_directions(2, 0, seed=0)


def test_direction_set_warns_when_too_few_for_bounded():
    with pytest.warns(RuntimeWarning):
        DirectionSet(np.array([[1.0, 0.0], [0.0, 1.0]]))


def test_direction_set_rejects_non_unit():
    with pytest.raises(ValueError):
        DirectionSet(np.array([[1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]))


# ---------------------------------------------------------------------------
# equidistant filtering
# ---------------------------------------------------------------------------

@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_filter_drops_duplicates():
    vecs = np.vstack([np.tile([1.0, 0.0], (100, 1)), [[0.0, 1.0]]])
    out = equidistant_filter(DirectionSet(vecs), 2)
    assert len(out) == 2
    assert np.array_equal(out.vectors, np.array([[1.0, 0.0], [0.0, 1.0]]))


def test_filter_identity_when_target_is_count():
    ds = sample_uniform_directions(2, 20, seed=5)
    assert equidistant_filter(ds, 20) is ds


def test_filter_rejects_oversized_target():
    ds = sample_uniform_directions(2, 20, seed=5)
    with pytest.raises(ValueError):
        equidistant_filter(ds, 21)


def min_pairwise_angle(vectors):
    cos = vectors @ vectors.T
    np.fill_diagonal(cos, -1.0)
    return float(np.arccos(np.clip(cos.max(), -1.0, 1.0)))


def test_filter_spreads_better_than_raw_sampling():
    # filtering 100 candidates down to 10 should beat 10 raw uniform draws
    # on minimum pairwise angle in at least 90% of seeds
    wins = 0
    for seed in range(50):
        candidates = sample_uniform_directions(2, 100, seed=seed)
        filtered = equidistant_filter(candidates, 10)
        raw = sample_uniform_directions(2, 10, seed=10_000 + seed)
        if min_pairwise_angle(filtered.vectors) >= min_pairwise_angle(raw.vectors):
            wins += 1
    assert wins >= 45


# ---------------------------------------------------------------------------
# containment
# ---------------------------------------------------------------------------

def test_box_contains_center():
    assert envelope_contains(unit_box_envelope(), np.array([0.0, 0.0]))


def test_box_excludes_outside_point():
    assert not envelope_contains(unit_box_envelope(), np.array([2.0, 0.0]))


def test_box_face_point_is_inside():
    # halfspaces are closed, so the boundary belongs to the envelope
    assert envelope_contains(unit_box_envelope(), np.array([1.0, 0.0]))


def test_contains_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        envelope_contains(unit_box_envelope(), np.array([0.0, 0.0, 0.0]))


def test_envelope_convexity_on_random_triples():
    rng = np.random.default_rng(31)
    for _ in range(50):
        snap = random_snapshot(rng, dim=int(rng.integers(2, 5)), n_u=12)
        env = snap.envelopes[0]
        # rejection-sample two contained points
        found = []
        for _ in range(2000):
            x = rng.normal(0.0, 3.0, size=env.dim)
            if envelope_contains(env, x):
                found.append(x)
                if len(found) == 2:
                    break
        if len(found) < 2:
            continue
        lam = rng.uniform(0.0, 1.0)
        mid = lam * found[0] + (1 - lam) * found[1]
        assert envelope_contains(env, mid)


# ---------------------------------------------------------------------------
# ray intercepts
# ---------------------------------------------------------------------------

def test_ray_exits_box_face():
    out = ray_envelope_intercept(unit_box_envelope(), np.zeros(2), np.array([1.0, 0.0]))
    assert out == pytest.approx([1.0, 0.0])


def test_ray_exits_box_corner():
    d = np.array([1.0, 1.0]) / np.sqrt(2.0)
    out = ray_envelope_intercept(unit_box_envelope(), np.zeros(2), d)
    assert out == pytest.approx([1.0, 1.0])


def test_ray_unbounded_without_opposing_halfspace():
    with pytest.warns(RuntimeWarning):
        dirs = DirectionSet(np.array([[1.0, 0.0]]))
    env = Envelope(dirs, np.array([-1.0]), 0.1)
    out = ray_envelope_intercept(env, np.zeros(2), np.array([1.0, 0.0]))
    assert out is None


def test_ray_requires_center_inside():
    with pytest.raises(ValueError):
        ray_envelope_intercept(unit_box_envelope(), np.array([5.0, 0.0]),
                               np.array([1.0, 0.0]))


def test_intercepts_lie_on_boundary():
    # at the intercept at least one halfspace is tight within 1e-9 relative
    # and none is violated beyond rounding
    rng = np.random.default_rng(41)
    for _ in range(200):
        snap = random_snapshot(rng, dim=2, n_u=10)
        env = snap.envelopes[0]
        center = None
        for _ in range(500):
            x = rng.normal(0.0, 2.0, size=2)
            if envelope_contains(env, x):
                center = x
                break
        if center is None:
            continue
        d = rng.normal(size=2)
        d /= np.linalg.norm(d)
        out = ray_envelope_intercept(env, center, d)
        if out is None:
            continue
        resid = env.directions.vectors @ out - env.quantiles
        scale = max(1.0, float(np.abs(env.quantiles).max()))
        assert resid.min() >= -1e-9 * scale
        assert resid.min() <= 1e-9 * scale


def test_exit_lengths_from_outside_center():
    # center outside the box: rays toward the box get a finite exit, rays
    # away from it report failure
    env = unit_box_envelope()
    center = np.array([3.0, 0.0])
    t, ok = ray_exit_lengths(env, center, np.array([[-1.0, 0.0], [1.0, 0.0]]))
    assert ok[0] and t[0] == pytest.approx(4.0)  # crosses to the far face
    assert not ok[1]


# ---------------------------------------------------------------------------
# depth queries
# ---------------------------------------------------------------------------

def naive_depth_scan(snapshot, point):
    """Exhaustive reference: check every halfspace of every level."""
    best = 0.0
    for env in snapshot.envelopes:
        proj = env.directions.vectors @ point
        if bool(np.all(proj >= env.quantiles)):
            best = max(best, env.alpha)
    return best


def test_query_returns_deepest_level():
    # quantiles of a standard normal at levels below 0.5 are negative along
    # every direction, so the origin sits inside all envelopes
    from scipy.special import ndtri

    dirs = sample_uniform_directions(2, 16, seed=55)
    alphas = (0.1, 0.2, 0.3)
    envs = tuple(Envelope(dirs, np.full(16, ndtri(a)), a) for a in alphas)
    snap = DepthSnapshot(envs)
    assert point_depth_query(snap, np.zeros(2)) == 0.3


def test_query_returns_zero_outside_everything():
    snap = random_snapshot(np.random.default_rng(56), dim=2, n_u=16)
    assert point_depth_query(snap, np.array([1e6, 1e6])) == 0.0


def test_query_matches_naive_scan_everywhere():
    # 1e4 random (snapshot, point) cases
    rng = np.random.default_rng(57)
    for _ in range(100):
        dim = int(rng.integers(2, 5))
        snap = random_snapshot(rng, dim=dim, n_u=int(rng.integers(dim + 2, 14)),
                               n_levels=int(rng.integers(1, 5)))
        pts = rng.normal(0.0, 2.5, size=(100, dim))
        batch = point_depths(snap, pts)
        for i, x in enumerate(pts):
            fast = point_depth_query(snap, x)
            assert fast == naive_depth_scan(snap, x)
            assert batch[i] == fast


def test_snapshot_nestedness_implies_containment_order():
    rng = np.random.default_rng(58)
    for _ in range(20):
        snap = random_snapshot(rng, dim=3, n_u=10, n_levels=4)
        pts = rng.normal(0.0, 2.0, size=(200, 3))
        inside = np.array([
            [envelope_contains(env, x) for env in snap.envelopes] for x in pts
        ])
        # containment per level must be a prefix: once lost it never returns
        assert np.all(inside[:, 1:] <= inside[:, :-1])


def test_snapshot_validation():
    dirs = sample_uniform_directions(2, 8, seed=1)
    other = sample_uniform_directions(2, 8, seed=2)
    q = np.zeros(8)
    with pytest.raises(ValueError):  # different direction sets
        DepthSnapshot((Envelope(dirs, q, 0.1), Envelope(other, q + 1, 0.2)))
    with pytest.raises(ValueError):  # levels not increasing
        DepthSnapshot((Envelope(dirs, q, 0.2), Envelope(dirs, q + 1, 0.1)))
    with pytest.raises(ValueError):  # quantiles decreasing in level
        DepthSnapshot((Envelope(dirs, q, 0.1), Envelope(dirs, q - 1.0, 0.2)))


# ---------------------------------------------------------------------------
# contour polylines
# ---------------------------------------------------------------------------

def test_box_polyline_hits_faces():
    out = contour_polyline_2d(unit_box_envelope(), 4, np.zeros(2))
    expected = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    assert np.allclose(out, expected, atol=1e-9)


def test_polyline_vertices_are_contained():
    rng = np.random.default_rng(61)
    for _ in range(20):
        snap = random_snapshot(rng, dim=2, n_u=12)
        env = snap.envelopes[0]
        center = None
        for _ in range(500):
            x = rng.normal(0.0, 2.0, size=2)
            if envelope_contains(env, x):
                center = x
                break
        if center is None:
            continue
        try:
            poly = contour_polyline_2d(env, 64, center)
        except ValueError:
            continue  # unbounded envelope
        for v in poly:
            assert envelope_contains(env, v)


def test_polyline_unbounded_envelope_raises():
    with pytest.warns(RuntimeWarning):
        dirs = DirectionSet(np.array([[1.0, 0.0], [0.0, 1.0]]))
    env = Envelope(dirs, np.array([-1.0, -1.0]), 0.1)
    with pytest.raises(ValueError):
        contour_polyline_2d(env, 16, np.zeros(2))


def hausdorff(a, b):
    d = cdist(a, b)
    return max(d.min(axis=0).max(), d.min(axis=1).max())


def test_polyline_converges_with_resolution():
    # disc-like envelope from 64 tangent halfplanes; dense ray casting is
    # the reference boundary
    angles = 2 * np.pi * np.arange(64) / 64
    dirs = DirectionSet(np.column_stack([np.cos(angles), np.sin(angles)]))
    env = Envelope(dirs, np.full(64, -1.0), 0.1)
    dense = contour_polyline_2d(env, 8192, np.zeros(2))
    errs = [hausdorff(contour_polyline_2d(env, r, np.zeros(2)), dense)
            for r in (16, 64, 256)]
    assert errs[0] > errs[1] > errs[2]
