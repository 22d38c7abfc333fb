import math

import numpy as np
import pytest

from oracles import exact_bootstrap_law
from uresample.bootstrap import (
    BootstrapPlan,
    bootstrap_distribution,
    bootstrap_quantile,
    bootstrap_root_values,
    exhaustive_resamples,
    generate_resamples,
)
from uresample.distcore import kolmogorov_distance
from uresample.roots import DegenerateSampleError, MeanRoot, StudentizedMeanRoot


def test_exhaustive_two_point_frozen():
    data = np.array([0.0, 1.0])
    plan = BootstrapPlan(n=2, mode="exhaustive")
    dist = bootstrap_distribution(data, MeanRoot(center=0.5), plan)
    r = math.sqrt(2.0) / 2.0
    assert dist.support == pytest.approx([-r, 0.0, r], abs=0.0)
    assert dist.masses == pytest.approx([0.25, 0.5, 0.25], abs=0.0)


def test_exhaustive_weights():
    for n in (2, 3, 4, 5):
        rows, weights = exhaustive_resamples(n)
        assert rows.shape == (math.comb(2 * n - 1, n), n)
        assert weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert (weights > 0.0).all()
    _, w2 = exhaustive_resamples(2)
    assert w2.tolist() == [0.25, 0.5, 0.25]


def test_exhaustive_matches_independent_enumeration():
    rng = np.random.default_rng(2)
    data = rng.normal(size=5)
    stat = lambda x: float(np.max(x))
    dist = bootstrap_distribution(data, stat, BootstrapPlan(n=5, mode="exhaustive"))
    values, weights = exact_bootstrap_law(data, stat)
    support, inverse = np.unique(values, return_inverse=True)
    cum = np.cumsum(np.bincount(inverse, weights=weights))
    assert dist.support.tolist() == support.tolist()
    assert dist.cum_probs == pytest.approx(cum, abs=1e-12)


def test_monte_carlo_converges_to_exhaustive():
    rng = np.random.default_rng(3)
    data = rng.normal(size=5)
    root = MeanRoot(center=float(data.mean()))
    exact = bootstrap_distribution(data, root, BootstrapPlan(n=5, mode="exhaustive"))
    mc = bootstrap_distribution(data, root, BootstrapPlan(n=5, draws=30_000, seed=4))
    assert kolmogorov_distance(mc, exact) <= 0.02


def test_recentered_law_has_mean_zero():
    rng = np.random.default_rng(5)
    data = rng.exponential(size=6)
    root = MeanRoot(center=float(data.mean()))
    dist = bootstrap_distribution(data, root, BootstrapPlan(n=6, mode="exhaustive"))
    # E* of the resample mean is the sample mean, exactly
    assert dist.mean() == pytest.approx(0.0, abs=1e-10)


def test_translation_invariance_bitwise():
    # dyadic data and n a power of two keep every intermediate exact
    data = np.array([0.125, 0.5, 1.25, 3.375])
    plan = BootstrapPlan(n=4, mode="exhaustive")
    base = bootstrap_distribution(data, MeanRoot(center=float(data.mean())), plan)
    shifted_data = data + 4.0
    shifted = bootstrap_distribution(shifted_data,
                                     MeanRoot(center=float(shifted_data.mean())), plan)
    assert shifted.support.tolist() == base.support.tolist()
    assert shifted.cum_probs.tolist() == base.cum_probs.tolist()


def test_scale_equivariance_bitwise():
    data = np.array([0.125, 0.5, 1.25, 3.375])
    plan = BootstrapPlan(n=4, mode="exhaustive")
    base = bootstrap_distribution(data, MeanRoot(center=float(data.mean())), plan)
    scaled_data = data * 4.0
    scaled = bootstrap_distribution(scaled_data,
                                    MeanRoot(center=float(scaled_data.mean())), plan)
    assert scaled.support.tolist() == (base.support * 4.0).tolist()
    assert scaled.cum_probs.tolist() == base.cum_probs.tolist()


def test_monte_carlo_determinism():
    rng = np.random.default_rng(6)
    data = rng.normal(size=20)
    root = MeanRoot(center=float(data.mean()))
    v1, w1, d1 = bootstrap_root_values(data, root, BootstrapPlan(n=20, draws=200, seed=9))
    v2, _, _ = bootstrap_root_values(data, root, BootstrapPlan(n=20, draws=200, seed=9))
    v3, _, _ = bootstrap_root_values(data, root, BootstrapPlan(n=20, draws=200, seed=10))
    assert w1 is None and d1 == 0.0
    assert v1.tolist() == v2.tolist()
    assert v1.tolist() != v3.tolist()


def test_quantile_endpoints():
    data = np.arange(4.0)
    plan = BootstrapPlan(n=4, mode="exhaustive")
    root = MeanRoot(center=float(data.mean()))
    assert bootstrap_quantile(data, root, plan, 0.0) == -math.inf
    assert bootstrap_quantile(data, root, plan, 1.0) == 2.0 * (3.0 - 1.5)
    with pytest.raises(ValueError):
        bootstrap_quantile(data, root, plan, 1.5)


def test_drop_policy():
    data = np.array([0.0, 1.0])
    plan = BootstrapPlan(n=2, mode="exhaustive")
    root = StudentizedMeanRoot(center=0.5)
    # constant resamples carry weight 1/2, far above the default policy
    with pytest.raises(DegenerateSampleError):
        bootstrap_distribution(data, root, plan)
    dist = bootstrap_distribution(data, root, plan, max_drop_frac=0.6)
    assert dist.support.tolist() == [0.0]
    assert dist.cum_probs.tolist() == [1.0]


def test_plan_validation():
    with pytest.raises(ValueError):
        BootstrapPlan(n=0)
    with pytest.raises(ValueError):
        BootstrapPlan(n=5, draws=0)
    with pytest.raises(ValueError):
        BootstrapPlan(n=5, mode="jackknife")
    with pytest.raises(ValueError):
        BootstrapPlan(n=10, mode="exhaustive")
    with pytest.raises(ValueError):
        generate_resamples(BootstrapPlan(n=3, mode="exhaustive"))
    with pytest.raises(ValueError):
        bootstrap_root_values(np.zeros(3), MeanRoot(center=0.0), BootstrapPlan(n=4))


def test_resample_indices_shape_and_range():
    idx = generate_resamples(BootstrapPlan(n=7, draws=40, seed=1))
    assert idx.shape == (40, 7)
    assert idx.min() >= 0 and idx.max() < 7
