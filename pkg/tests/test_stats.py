import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sst
from sklearn.base import clone

from schmidt_evs import laws
from schmidt_evs.exceptions import DomainError
from schmidt_evs.specfun import integrate
from schmidt_evs.stats import (
    CenterScaler,
    center_rescale,
    empirical_root_moment,
    histogram,
    histogram_from_counts,
    ks_distance,
    rice_bins,
)


def _wishart_rescaled(n_real, d, rng):
    g = rng.standard_normal((n_real, d, d))
    s = np.linalg.svd(g, compute_uv=False) ** 2
    return d * s / s.sum(axis=1, keepdims=True)


# --- histogram --------------------------------------------------------------------------------


def test_histogram_constant_samples():
    c = 2.5
    dist = histogram(np.full(7, c), bins=1)
    lo, hi = dist.bin_edges
    assert lo < c < hi
    assert dist.density[0] == pytest.approx(1 / (hi - lo), rel=1e-12, abs=0)
    assert dist.mass() == pytest.approx(1.0, abs=1e-10)


def test_histogram_normal_density():
    x = np.random.default_rng(0).standard_normal(10 ** 6)
    dist = histogram(x, bins=100)
    assert np.max(np.abs(dist.density - laws.normal_pdf(dist.centers))) <= 0.01


@settings(max_examples=50)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), st.integers(1, 50))
def test_histogram_mass(xs, bins):
    dist = histogram(xs, bins=bins)
    assert dist.mass() == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.diff(dist.bin_edges) > 0)
    assert dist.counts.sum() == len(xs)


def test_histogram_rice_default():
    assert rice_bins(1000) == 20
    assert len(histogram(np.arange(1000.0)).counts) == 20


def test_histogram_quadrature_round_trip():
    x = np.random.default_rng(1).exponential(size=5000)
    dist = histogram(x, bins=12)
    f = lambda t: float(dist.density[min(np.searchsorted(dist.bin_edges, t, side="right") - 1, 11)])
    r = integrate(f, dist.bin_edges[0], dist.bin_edges[-1], points=list(dist.bin_edges), tol=1e-12)
    assert r.value == pytest.approx(1.0, abs=1e-10)


def test_histogram_errors():
    with pytest.raises(ValueError):
        histogram([])
    with pytest.raises(ValueError):
        histogram([1.0, 2.0], range=(1.0, 1.0))
    with pytest.raises(ValueError):
        histogram_from_counts([1, 2], [0.0, 1.0, 1.0])


def test_histogram_from_counts_power_sums_moments():
    x = np.random.default_rng(2).standard_normal(1000)
    counts, edges = np.histogram(x, bins=30)
    dist = histogram_from_counts(counts, edges, power_sums=np.array([x.size, x.sum(), (x * x).sum()]))
    assert dist.moment(2) == pytest.approx(np.mean(x * x), rel=1e-12, abs=0)
    with pytest.raises(ValueError):
        dist.moment(3)


# --- root moments -----------------------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 5])
def test_root_moment_constant(k):
    assert empirical_root_moment(np.full(10, 3.0), k) == pytest.approx(3.0, rel=1e-14, abs=0)


def test_root_moment_wishart_k1_is_one():
    x = _wishart_rescaled(200, 64, np.random.default_rng(0))
    assert empirical_root_moment(x, 1) == pytest.approx(1.0, abs=1e-10)


def test_root_moment_wishart_catalan():
    rng = np.random.default_rng(1)
    x = np.concatenate([_wishart_rescaled(1000, 64, rng).ravel() for _ in range(16)])
    assert x.size >= 10 ** 6
    for k in range(2, 7):
        assert empirical_root_moment(x, k) == pytest.approx(laws.mp_moment(k) ** (1 / k), rel=0.02, abs=0)


def test_root_moment_domain():
    with pytest.raises(DomainError):
        empirical_root_moment([1.0, -1.0], 2)
    with pytest.raises(DomainError):
        empirical_root_moment([1.0], 0)


# --- centering --------------------------------------------------------------------------------


def test_center_rescale_examples():
    np.testing.assert_array_equal(center_rescale([4.0], 4.0, 2.0), [0.0])
    v = np.array([1.5, -2.0, 7.0])
    np.testing.assert_array_equal(center_rescale(v, 0.0, 1.0), v)
    with pytest.raises(DomainError):
        center_rescale(v, 0.0, 0.0)


@settings(max_examples=50)
@given(st.floats(-1e3, 1e3), st.floats(1e-3, 1e3), st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20))
def test_center_rescale_invertible(c, s, vals):
    sc = CenterScaler(c, s).fit(np.asarray(vals))
    back = sc.inverse_transform(sc.transform(vals))
    np.testing.assert_allclose(back, vals, rtol=1e-15, atol=1e-15 * max(abs(c), 1.0) * 1e3)


def test_center_scaler_johnstone_and_params():
    sc = CenterScaler.johnstone(64)
    assert sc.get_params() == {"center": 0.0625, "scale": pytest.approx(2.46076e-3, rel=1e-5)}
    assert clone(sc).get_params()["center"] == 0.0625
    with pytest.raises(DomainError):
        CenterScaler(scale=-1.0).fit([1.0])


# --- KS ---------------------------------------------------------------------------------------


def test_ks_self_consistent():
    n = 10 ** 4
    x = np.random.default_rng(3).standard_normal(n)
    assert ks_distance(x, laws.normal_cdf) <= 1.63 / math.sqrt(n)


def test_ks_point_mass_at_median():
    assert ks_distance(np.zeros(50), laws.normal_cdf) == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=30)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=100))
def test_ks_matches_scipy(xs):
    ref = sst.kstest(xs, "norm").statistic
    assert ks_distance(xs, laws.normal_cdf) == pytest.approx(ref, abs=1e-12)


def test_ks_empty():
    with pytest.raises(ValueError):
        ks_distance([], laws.normal_cdf)
