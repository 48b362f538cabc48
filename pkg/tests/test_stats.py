import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import half_normal_pdf
from stormkl import stats
from stormkl.stats import IntegrationBounds


def test_percentile_cases():
    assert stats.percentile([1, 2, 3, 4, 5], 0) == 1.0
    assert stats.percentile([1, 2, 3, 4, 5], 50) == 3.0
    assert stats.percentile([10, 20], 25) == 12.5
    with pytest.raises(ValueError):
        stats.percentile([], 50)
    with pytest.raises(ValueError):
        stats.percentile([1.0], 101)


def test_silverman_two_points():
    # sd = 0.7071, IQR/1.34 = 0.3731, 0.9 * 0.3731 * 2^-0.2
    assert stats.silverman_bandwidth([0.0, 1.0]) == pytest.approx(0.2923, abs=1e-3)


@pytest.mark.parametrize("data", [[1.0], [2.0, 2.0, 2.0], []])
def test_silverman_degenerate(data):
    with pytest.raises(stats.DegenerateDataError):
        stats.silverman_bandwidth(data)


def test_silverman_scale_homogeneous():
    x = np.random.default_rng(0).gamma(2.0, 1.0, 500)
    assert stats.silverman_bandwidth(1000 * x) == pytest.approx(1000 * stats.silverman_bandwidth(x), rel=1e-12)


def test_reflected_single_sample_at_zero():
    h = 0.5
    est = stats.kde_reflected([0.0], np.array([0.0, -1.0]), h)
    # both the sample and its mirror sit at zero: 2 * phi(0) / h
    assert est.density[0] == pytest.approx(0.7979 / h, abs=1e-3)
    assert est.density[1] == 0.0


def test_reflection_negligible_far_from_zero():
    rng = np.random.default_rng(1)
    data = rng.normal(100.0, 1.0, 300)
    x = np.linspace(95, 105, 101)
    h = stats.silverman_bandwidth(data)
    assert np.allclose(stats.kde_reflected(data, x, h).density, stats.kde_plain(data, x, h).density, atol=1e-8)


def test_reflected_rejects_negative_samples():
    with pytest.raises(ValueError):
        stats.kde_reflected([-1.0, 2.0], np.linspace(0, 1, 5), 0.1)


def test_half_normal_mass_and_boundary():
    scale = 2.0
    data = np.abs(np.random.default_rng(2).normal(0.0, scale, 1000))
    x = np.linspace(0.0, 8 * scale, 4001)
    est = stats.fit_density(data, x)
    assert np.trapezoid(est.density, x) == pytest.approx(1.0, abs=1e-3)
    assert est.density[0] == pytest.approx(half_normal_pdf(0.0, scale), rel=0.15)


def test_bounds_validation():
    with pytest.raises(ValueError):
        IntegrationBounds(1.0, 1.0)
    with pytest.raises(ValueError):
        IntegrationBounds(0.0, 1.0, 1)
    b = stats.integration_bounds(np.arange(101.0), 0, 99, 11)
    assert (b.lower, b.upper) == (0.0, 99.0)


def _fit(data, bounds, reflect=True):
    return stats.fit_density(data, bounds.grid(), reflect=reflect)


def test_kl_self_is_zero():
    data = np.random.default_rng(3).gamma(2.0, 1.0, 400)
    b = stats.integration_bounds(data)
    f = _fit(data, b)
    assert stats.kl_divergence(f, f, b) == pytest.approx(0.0, abs=1e-9)


def test_kl_floor_keeps_it_finite():
    b = IntegrationBounds(0.0, 10.0, 64)
    x = b.grid()
    f = stats.DensityEstimate(x, np.where(x > 5, 0.2, 0.0), 1.0, 10)
    g = stats.DensityEstimate(x, np.where(x <= 5, 0.2, 0.0), 1.0, 10)
    kl = stats.kl_divergence(f, g, b)
    assert np.isfinite(kl) and kl > 0


def test_kl_requires_grid_support():
    b = IntegrationBounds(0.0, 1.0, 16)
    f = stats.DensityEstimate(np.linspace(0, 1, 17), np.ones(17), 1.0, 5)
    with pytest.raises(ValueError):
        stats.kl_divergence(f, f, b)


def test_kl_nonnegative_with_full_mass_bounds():
    """With both densities essentially inside the bounds, KL is a true divergence."""
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = rng.gamma(rng.uniform(1, 4), rng.uniform(0.5, 2), rng.integers(30, 300))
        c = rng.gamma(rng.uniform(1, 4), rng.uniform(0.5, 2), rng.integers(30, 300))
        hi = max(a.max(), c.max()) + 10 * max(stats.silverman_bandwidth(a), stats.silverman_bandwidth(c))
        b = IntegrationBounds(0.0, hi, 4096)
        assert stats.kl_divergence(_fit(a, b), _fit(c, b), b) >= -1e-6


def test_kl_scale_invariant():
    rng = np.random.default_rng(5)
    a, c = rng.gamma(2.0, 1.0, 300), rng.gamma(3.0, 1.0, 500)
    b = stats.integration_bounds(c)
    kl = stats.kl_divergence(_fit(a, b), _fit(c, b), b)
    b2 = stats.integration_bounds(1000 * c)
    kl2 = stats.kl_divergence(_fit(1000 * a, b2), _fit(1000 * c, b2), b2)
    assert kl2 == pytest.approx(kl, abs=1e-9)


def test_kl_converges_in_grid_points():
    rng = np.random.default_rng(6)
    a, c = rng.gamma(2.0, 1.0, 300), rng.gamma(2.5, 1.0, 500)
    vals = []
    for n in (512, 1024):
        b = stats.integration_bounds(c, n_points=n)
        vals.append(stats.kl_divergence(_fit(a, b), _fit(c, b), b))
    assert abs(vals[0] - vals[1]) < 1e-4


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_kl_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    a, c = rng.gamma(2.0, 1.0, 80), rng.gamma(2.0, 1.5, 120)
    b = stats.integration_bounds(c)
    kl = stats.kl_divergence(_fit(a, b), _fit(c, b), b)
    b2 = stats.integration_bounds(rng.permutation(c))
    kl2 = stats.kl_divergence(_fit(rng.permutation(a), b2), _fit(rng.permutation(c), b2), b2)
    assert kl2 == pytest.approx(kl, abs=1e-10)
