import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dyadic_step, quantile_inequality_violations, slow_quantile
from uresample.distcore import (
    StepDistribution,
    critical_value,
    dkw_bound,
    edf,
    edf_quantile,
    kolmogorov_distance,
    sup_diff,
)

ALPHA_GRID = [k / 16.0 for k in range(1, 16)]


def test_quantile_transfer_inequalities_random_pairs():
    rng = np.random.default_rng(2024)
    total = 0
    for _ in range(300):
        f = dyadic_step(rng)
        g = dyadic_step(rng)
        total += quantile_inequality_violations(f, g, ALPHA_GRID)
    assert total == 0


def test_quantile_hand_case():
    d = StepDistribution.from_values([1.0, 1.0, 2.0])
    assert d.cdf(1.0) == pytest.approx(2.0 / 3.0)
    assert d.cdf_left(1.0) == 0.0
    assert d.cdf(1.5) == pytest.approx(2.0 / 3.0)
    assert d.cdf(2.0) == 1.0
    assert d.cdf_left(2.0) == pytest.approx(2.0 / 3.0)
    assert d.quantile(0.5) == 1.0
    assert d.quantile(2.0 / 3.0) == 1.0
    assert d.quantile(np.nextafter(2.0 / 3.0, 1.0)) == 2.0
    assert d.quantile(1.0) == 2.0


def test_quantile_sentinels():
    d = StepDistribution.from_values([3.0, 5.0])
    assert d.quantile(0.0) == -math.inf
    assert d.quantile(1.0) == 5.0
    assert critical_value(d, 0.0) == -math.inf
    assert critical_value(d, 1.0) == math.inf
    assert critical_value(d, 0.5) == d.quantile(0.5)
    with pytest.raises(ValueError):
        d.quantile(1.5)
    with pytest.raises(ValueError):
        d.quantile(float("nan"))


def test_quantile_matches_slow_scan():
    rng = np.random.default_rng(7)
    for _ in range(50):
        vals = rng.integers(-5, 6, size=rng.integers(1, 12)).astype(float)
        w = rng.integers(1, 5, size=vals.size).astype(float)
        d = StepDistribution.from_values(vals, w)
        for alpha in (0.1, 0.25, 0.5, 0.75, 0.9, 1.0):
            assert d.quantile(alpha) == slow_quantile(vals, w, alpha)


def test_edf_quantile_bitwise_matches_step_distribution():
    rng = np.random.default_rng(11)
    for _ in range(40):
        vals = np.sort(rng.choice(rng.normal(size=6), size=rng.integers(1, 30)))
        d = StepDistribution.from_values(vals)
        m = vals.size
        levels = list(np.arange(1, m + 1) / m) + [0.135, 0.5, 0.975, 1.0]
        for alpha in levels:
            assert edf_quantile(vals, alpha) == d.quantile(alpha)
    with pytest.raises(ValueError):
        edf_quantile(np.array([1.0]), 0.0)


@settings(max_examples=150, deadline=None)
@given(
    vals=st.lists(st.integers(-40, 40), min_size=1, max_size=20),
    a=st.integers(1, 63),
    b=st.integers(1, 63),
)
def test_quantile_cdf_galois(vals, a, b):
    d = StepDistribution.from_values(np.array(vals, dtype=float) / 4.0)
    lo, hi = sorted((a / 64.0, b / 64.0))
    # F(F^{-1}(a)) >= a, and the generalized inverse is monotone
    assert d.cdf(d.quantile(hi)) >= hi
    assert d.quantile(lo) <= d.quantile(hi)
    x = d.support[len(d.support) // 2]
    level = d.cdf(x)
    assert d.quantile(level) <= x


def test_sup_diff_hand_cases():
    f = StepDistribution.from_values([0.0])
    g = StepDistribution.from_values([1.0])
    assert sup_diff(f, g) == 1.0
    assert sup_diff(g, f) == 0.0
    assert kolmogorov_distance(f, g) == 1.0
    assert kolmogorov_distance(f, f) == 0.0

    h1 = StepDistribution(np.array([0.0, 1.0]), np.array([0.25, 1.0]))
    h2 = StepDistribution(np.array([0.0, 1.0]), np.array([0.75, 1.0]))
    assert sup_diff(h2, h1) == 0.5
    assert sup_diff(h1, h2) == 0.0


def test_sup_diff_plateau_between_atoms():
    # the gap peaks on [-1, 0), a plateau strictly between the two F atoms
    f = StepDistribution(np.array([0.0, 2.0]), np.array([0.1, 1.0]))
    g = StepDistribution(np.array([-1.0, 2.0]), np.array([0.9, 1.0]))
    assert sup_diff(g, f) == pytest.approx(0.9)
    assert sup_diff(f, g) == 0.0
    assert kolmogorov_distance(g, f) == pytest.approx(0.9)


def test_dkw_bound_values():
    assert dkw_bound(0.1, 100) == pytest.approx(2.5066282746310002, abs=0.0)
    assert dkw_bound(0.2, 200) == pytest.approx(0.8862269254527579, abs=0.0)
    assert dkw_bound(0.5, 8) == pytest.approx((1 / 0.5) * math.sqrt(2 * math.pi / 8))
    with pytest.raises(ValueError):
        dkw_bound(0.0, 10)
    with pytest.raises(ValueError):
        dkw_bound(0.3, 0)


def test_from_values_merges_ties_and_weights():
    d = StepDistribution.from_values([2.0, 1.0, 2.0], [0.5, 1.0, 0.5])
    assert list(d.support) == [1.0, 2.0]
    assert d.masses == pytest.approx([0.5, 0.5])
    dz = StepDistribution.from_values([1.0, 2.0, 3.0], [1.0, 0.0, 1.0])
    assert list(dz.support) == [1.0, 3.0]


def test_validation_errors():
    with pytest.raises(ValueError):
        StepDistribution(np.array([1.0, 1.0]), np.array([0.5, 1.0]))
    with pytest.raises(ValueError):
        StepDistribution(np.array([1.0, 2.0]), np.array([0.5, 0.9]))
    with pytest.raises(ValueError):
        StepDistribution.from_values([])
    with pytest.raises(ValueError):
        StepDistribution.from_values([1.0, np.inf])
    with pytest.raises(ValueError):
        StepDistribution.from_values([1.0, 2.0], [1.0, -1.0])


def test_cdf_accepts_arrays():
    d = edf(np.array([1.0, 2.0, 3.0]))
    out = d.cdf(np.array([0.0, 1.0, 2.5, 3.0]))
    assert out == pytest.approx([0.0, 1 / 3, 2 / 3, 1.0])
    left = d.cdf_left(np.array([1.0, 3.0]))
    assert left == pytest.approx([0.0, 2 / 3])


def test_csv_round_trip(tmp_path):
    d = StepDistribution.from_values(np.random.default_rng(3).normal(size=17))
    path = tmp_path / "dist.csv"
    d.to_csv(path)
    back = StepDistribution.from_csv(path)
    assert np.array_equal(back.support, d.support)
    assert np.array_equal(back.cum_probs, d.cum_probs)
    with pytest.raises(ValueError):
        bad = tmp_path / "bad.csv"
        bad.write_text("x,y\n1,2\n")
        StepDistribution.from_csv(bad)


def test_mean():
    d = StepDistribution.from_values([0.0, 0.0, 3.0])
    assert d.mean() == pytest.approx(1.0)
