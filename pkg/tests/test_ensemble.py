import math

import numpy as np
import pytest
from scipy import stats
from scipy.spatial import cKDTree
from scipy.special import digamma

from thermodiff.analytic import rate_conditional
from thermodiff.ensemble import (
    CHUNK,
    Scheme,
    ensemble_stats,
    entropy_nn,
    rate_from_ensemble,
    sample_trajectories,
)
from thermodiff.errors import (
    InvalidNeighborOrder,
    InvalidScheme,
    NonPositiveDt,
    TooFewParticles,
    TooFewSamples,
)


def within(value, target, se, k=3.0):
    return abs(value - target) <= k * se


def kdtree_entropy(samples, k):
    """Reference Kozachenko-Leonenko estimate using a KD-tree for neighbours."""
    pts = np.asarray(samples)[:, None]
    eps = cKDTree(pts).query(pts, k=k + 1)[0][:, k]
    return digamma(len(samples)) - digamma(k) + math.log(2) + np.log(eps).mean()


def test_shape_and_metadata(unit_scales):
    ens = sample_trajectories(unit_scales, 0.1, 5, 10, seed=1)
    assert ens.positions.shape == (10, 6)
    assert ens.scheme is Scheme.FULL
    np.testing.assert_allclose(ens.times, 0.1 * np.arange(6))


@pytest.mark.parametrize(
    "kwargs, exc",
    [
        (dict(dt=-1.0), NonPositiveDt),
        (dict(dt=0.0), NonPositiveDt),
        (dict(n_particles=1), TooFewParticles),
        (dict(scheme="bogus"), InvalidScheme),
    ],
)
def test_validation(unit_scales, kwargs, exc):
    args = dict(dt=0.1, n_steps=3, n_particles=10, seed=0, scheme="full") | kwargs
    with pytest.raises(exc):
        sample_trajectories(unit_scales, **args)


def test_bit_identical_regardless_of_workers(unit_scales):
    n = 2 * CHUNK + 123
    a = sample_trajectories(unit_scales, 0.05, 4, n, seed=99, workers=1)
    b = sample_trajectories(unit_scales, 0.05, 4, n, seed=99, workers=3)
    c = sample_trajectories(unit_scales, 0.05, 4, n, seed=99, workers=1)
    assert a.positions.tobytes() == b.positions.tobytes() == c.positions.tobytes()
    d = sample_trajectories(unit_scales, 0.05, 4, n, seed=100)
    assert not np.array_equal(a.positions, d.positions)


def test_prefix_stable_under_particle_count(unit_scales):
    small = sample_trajectories(unit_scales, 0.1, 3, 1000, seed=5)
    large = sample_trajectories(unit_scales, 0.1, 3, 5000, seed=5)
    np.testing.assert_array_equal(small.positions, large.positions[:1000])


def test_schemes_decompose_pathwise(unit_scales):
    # Same seed: the streams for x0, p and W are shared between schemes.
    full, q, c = (sample_trajectories(unit_scales, 0.1, 5, 500, 7, s) for s in Scheme)
    np.testing.assert_allclose(full.positions, q.positions + c.positions, rtol=0, atol=1e-14)
    assert np.all(c.positions[:, 0] == 0)


@pytest.mark.parametrize(
    "scheme, target",
    [(Scheme.FULL, 2.25), (Scheme.QUANTUM_ONLY, 1.25), (Scheme.CLASSICAL_ONLY, 1.0)],
)
def test_marginal_variance_at_t1(unit_scales, scheme, target):
    st = ensemble_stats(sample_trajectories(unit_scales, 0.25, 4, 200_000, 17, scheme))
    assert st.var_analytic[-1] == pytest.approx(target)
    assert within(st.var[-1], target, st.se[-1])


def test_stats_columns(unit_scales):
    ens = sample_trajectories(unit_scales, 0.2, 5, 40_000, 3)
    st = ensemble_stats(ens)
    np.testing.assert_allclose(st.se, st.var * math.sqrt(2 / (40_000 - 1)))
    np.testing.assert_allclose(st.var_analytic, [(0.5 + t) ** 2 for t in st.t])
    assert within(st.var[0], 0.25, st.se[0])
    assert np.all(np.abs(st.mean) <= 4 * np.sqrt(st.var / 40_000))
    for v, va, se in zip(st.var, st.var_analytic, st.se):
        assert within(v, va, se)


def test_variance_additivity_independent_seeds(unit_scales):
    runs = {
        s: ensemble_stats(sample_trajectories(unit_scales, 0.25, 8, 100_000, seed, s))
        for seed, s in zip((11, 12, 13), Scheme)
    }
    full, q, c = runs[Scheme.FULL], runs[Scheme.QUANTUM_ONLY], runs[Scheme.CLASSICAL_ONLY]
    for n in range(1, 9):
        combined = math.sqrt(full.se[n] ** 2 + q.se[n] ** 2 + c.se[n] ** 2)
        assert abs(full.var[n] - q.var[n] - c.var[n]) <= 3 * combined


def test_wiener_scaling(unit_scales):
    st = ensemble_stats(sample_trajectories(unit_scales, 0.5, 4, 200_000, 21, "classical_only"))
    ratio = st.var[4] / st.var[2]
    # delta-method SE of a ratio of (correlated, but conservatively treated) variances
    se = ratio * math.sqrt((st.se[4] / st.var[4]) ** 2 + (st.se[2] / st.var[2]) ** 2)
    assert within(ratio, 2.0, se)


def test_cross_section_gaussianity(unit_scales):
    # D'Agostino-Pearson K^2 test on 10^4 samples at t = 1.
    accepted = 0
    for seed in range(100):
        x = sample_trajectories(unit_scales, 0.5, 2, 10_000, seed).positions[:, -1]
        accepted += stats.normaltest(x).pvalue >= 1e-3
    assert accepted >= 95


def test_nn_matches_kdtree_reference():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(5000)
    for k in (1, 4, 20):
        assert entropy_nn(x, k) == pytest.approx(kdtree_entropy(x, k), abs=1e-12)


def test_nn_gaussian_entropy():
    x = np.random.default_rng(8).normal(0, 0.5, 100_000)
    assert abs(entropy_nn(x, 4) - 0.725791352644727) <= 0.02


def test_nn_scaling_law():
    x = np.random.default_rng(9).normal(0, 0.5, 10_000)
    assert entropy_nn(4 * x, 4) - entropy_nn(x, 4) == pytest.approx(math.log(4), abs=1e-10)
    assert entropy_nn(x + 3.0, 4) == pytest.approx(entropy_nn(x, 4), abs=1e-10)


def test_nn_validation():
    with pytest.raises(TooFewSamples):
        entropy_nn(np.arange(10.0))
    x = np.random.default_rng(0).standard_normal(200)
    for k in (0, 21, 2.5):
        with pytest.raises(InvalidNeighborOrder):
            entropy_nn(x, k)


def test_plugin_rate_near_exact(unit_scales):
    ens = sample_trajectories(unit_scales, 1e-3, 10, 200_000, 31)
    points = rate_from_ensemble(ens)
    assert len(points) == 10
    assert abs(np.mean([p.rate for p in points]) - 2.0) <= 0.1
    first = points[0]
    assert within(first.rate, rate_conditional(unit_scales, 0, 1e-3).rate, first.se)


def test_plugin_rate_tracks_closed_form(unit_scales):
    points = rate_from_ensemble(sample_trajectories(unit_scales, 0.1, 6, 200_000, 2))
    for p in points:
        assert within(p.rate, rate_conditional(unit_scales, p.n, 0.1).rate, p.se)


def test_quantum_only_rate_vanishes_at_start(unit_scales):
    points = rate_from_ensemble(sample_trajectories(unit_scales, 1e-3, 5, 200_000, 4, "quantum_only"))
    # exact: d/dt of log(0.25 + t^2) / 2 is ~ 4t near zero
    assert abs(points[0].rate) < 0.1
    for p in points:
        expected = (math.log(0.25 + ((p.n + 1) * 1e-3) ** 2) - math.log(0.25 + (p.n * 1e-3) ** 2)) / 2e-3
        assert within(p.rate, expected, p.se, k=4)


def test_estimators_agree(unit_scales):
    ens = sample_trajectories(unit_scales, 0.25, 4, 20_000, 7)
    plugin = rate_from_ensemble(ens, "plugin_gaussian")
    nn = rate_from_ensemble(ens, "nearest_neighbor", k=4)
    for a, b in zip(plugin, nn):
        assert abs(a.rate - b.rate) <= 3 * math.hypot(a.se, b.se)


def test_rate_needs_two_steps(unit_scales):
    with pytest.raises(ValueError):
        rate_from_ensemble(sample_trajectories(unit_scales, 0.1, 1, 200, 0))
