import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orderkin.dsmc import h_estimate, sample_maxwellian
from orderkin.entropy import estimate_h, histogram_h, knn_h, scott_widths
from orderkin.errors import ConfigurationError

GAUSS_1D = -0.5 * np.log(2 * np.pi * np.e)


@pytest.mark.parametrize("estimator", ["histogram", "knn"])
def test_standard_gaussian(estimator):
    x = np.random.default_rng(0).standard_normal(10_000)
    H, sigma = estimate_h(x, estimator)
    assert abs(H - GAUSS_1D) < 0.05
    assert 0 < sigma < 0.05


@pytest.mark.parametrize("estimator", ["histogram", "knn"])
def test_gaussian_in_three_dims(estimator):
    x = np.random.default_rng(1).standard_normal((20_000, 3))
    H, _ = estimate_h(x, estimator)
    assert abs(H - 3 * GAUSS_1D) < 0.1


@pytest.mark.parametrize("estimator", ["histogram", "knn"])
@pytest.mark.parametrize("c", [0.5, 3.0])
def test_scaling_shift(estimator, c):
    x = np.random.default_rng(2).standard_normal((5000, 2))
    h0, _ = estimate_h(x, estimator)
    h1, _ = estimate_h(c * x, estimator)
    # Scott widths and kNN radii scale with the data, so the shift is exact up to rounding
    assert h1 - h0 == pytest.approx(-2 * np.log(c), abs=1e-9)


@pytest.mark.parametrize("estimator", ["histogram", "knn"])
def test_uniform_box(estimator):
    lo, hi = np.array([0.0, -1.0]), np.array([2.0, 0.5])
    x = np.random.default_rng(3).uniform(lo, hi, (20_000, 2))
    H, _ = estimate_h(x, estimator)
    assert abs(H - (-np.log(np.prod(hi - lo)))) < 0.05


def test_explicit_bins_uniform():
    x = np.random.default_rng(4).uniform(0, 4, 10_000)
    H, _ = histogram_h(x, bins=20)
    assert abs(H + np.log(4.0)) < 0.05


def test_scott_widths_value():
    x = np.random.default_rng(5).standard_normal((1000, 1))
    assert scott_widths(x)[0] == pytest.approx(3.49 * x.std(ddof=1) * 1000 ** (-1 / 3))


def test_auto_switches_to_knn_above_three_dims():
    x = np.random.default_rng(6).standard_normal((2000, 4))
    assert estimate_h(x) == knn_h(x)
    y = x[:, :3]
    assert estimate_h(y) == histogram_h(y)


def test_deterministic():
    x = np.random.default_rng(7).standard_normal((3000, 3))
    assert estimate_h(x, "knn") == estimate_h(x.copy(), "knn")
    assert estimate_h(x, "histogram") == estimate_h(x.copy(), "histogram")


def test_errors():
    with pytest.raises(ConfigurationError):
        estimate_h(np.zeros((100, 1)), "histogram")
    with pytest.raises(ConfigurationError):
        estimate_h(np.random.default_rng(0).standard_normal(100), "parzen")
    with pytest.raises(ConfigurationError):
        knn_h(np.random.default_rng(0).standard_normal(10), k=10)


def test_h_needs_a_thousand_particles():
    with pytest.raises(ConfigurationError):
        h_estimate(sample_maxwellian({}, "s1", 999, seed=0))
    h_estimate(sample_maxwellian({}, "s1", 1000, seed=0))


def test_maxwellian_h_matches_closed_form():
    # p ~ N(0, 1) per component, sigma ~ N(0, I) with I = 1: three unit Gaussians
    ens = sample_maxwellian({}, "s1", 20_000, seed=1)
    est = h_estimate(ens)
    assert abs(est.value - 3 * GAUSS_1D) < 0.1


@given(st.floats(0.2, 5.0), st.floats(-3.0, 3.0))
@settings(max_examples=30, deadline=None)
def test_h_is_affine_covariant(scale, shift):
    x = np.random.default_rng(8).standard_normal((2000, 1))
    h0, s0 = knn_h(x)
    h1, s1 = knn_h(scale * x + shift)
    assert h1 == pytest.approx(h0 - np.log(scale), abs=1e-9)
    assert s1 == pytest.approx(s0, rel=1e-6)
