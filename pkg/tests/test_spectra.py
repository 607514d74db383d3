import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from schmidt_evs import laws
from schmidt_evs.ensembles import sample_goe
from schmidt_evs.exceptions import DomainError
from schmidt_evs.spectra import (
    EigenSystem,
    SchmidtSpectrum,
    SchmidtTransformer,
    eigenvector_components,
    extreme_eigenvalue,
    full_eigh,
    mid_spectrum_states,
    mid_spectrum_window,
    rescale_schmidt,
    schmidt_spectra,
    schmidt_spectrum,
    spacing_ratios,
    window_eigh,
)


def _unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


# --- full_eigh -----------------------------------------------------------------------------


def test_full_eigh_diagonal():
    es = full_eigh(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(es.eigenvalues, [1, 2, 3], atol=1e-15)


def test_full_eigh_pauli_x():
    es = full_eigh(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(es.eigenvalues, [-1, 1], atol=1e-15)
    v = es.eigenvectors
    s = 1 / math.sqrt(2)
    assert abs(abs(v[:, 0] @ np.array([s, -s])) - 1) < 1e-14
    assert abs(abs(v[:, 1] @ np.array([s, s])) - 1) < 1e-14


def test_full_eigh_reconstruction_goe200():
    a = sample_goe(200, np.random.default_rng(0))
    es = full_eigh(a)
    v, w = es.eigenvectors, es.eigenvalues
    assert np.max(np.abs(v @ np.diag(w) @ v.T - a)) <= 1e-8
    assert np.max(np.abs(v.T @ v - np.eye(200))) <= 1e-8
    assert np.all(np.diff(w) >= 0)
    res = np.linalg.norm(a @ v - v * w, axis=0)
    assert np.max(res) <= 1e-8 * np.linalg.norm(a, 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2 ** 32))
def test_full_eigh_trace(n, seed):
    a = sample_goe(n, np.random.default_rng(seed))
    assert abs(full_eigh(a, want_vectors=False).eigenvalues.sum() - np.trace(a)) <= 1e-8 * n


def test_full_eigh_rejects_nonfinite():
    with pytest.raises(ValueError):
        full_eigh(np.array([[0.0, np.nan], [np.nan, 1.0]]))


def test_full_eigh_accepts_sparse():
    m = sp.coo_matrix(np.diag([2.0, -1.0]))
    np.testing.assert_allclose(full_eigh(m).eigenvalues, [-1, 2])


# --- mid-spectrum selection ---------------------------------------------------------------------


def test_mid_window_4096_300():
    lo, hi = mid_spectrum_window(4096, 300)
    assert (lo, hi - 1) == (1898, 2197)


def test_mid_window_all_and_single():
    assert mid_spectrum_window(10, 10) == (0, 10)
    lo, hi = mid_spectrum_window(11, 1)
    assert (lo, hi) == (5, 6)


def test_mid_window_too_many():
    with pytest.raises(ValueError):
        mid_spectrum_window(4, 5)


def test_mid_spectrum_states_from_full_and_window():
    a = sample_goe(64, np.random.default_rng(3))
    full = full_eigh(a)
    win = window_eigh(a, 10)
    assert win.offset == 27
    np.testing.assert_allclose(win.eigenvalues, full.eigenvalues[27:37], atol=1e-10)
    vf = mid_spectrum_states(full, 10)
    vw = mid_spectrum_states(win, 10)
    np.testing.assert_allclose(np.abs(np.sum(vf * vw, axis=0)), 1.0, atol=1e-10)


def test_mid_spectrum_states_needs_vectors():
    with pytest.raises(ValueError):
        mid_spectrum_states(EigenSystem(np.arange(4.0)), 2)


# --- Schmidt spectra ------------------------------------------------------------------------------


def test_schmidt_product_state():
    s = schmidt_spectrum(np.kron([1.0, 0.0], [1.0, 0.0]), 2, 2)
    np.testing.assert_allclose(s.values, [1.0, 0.0], atol=1e-15)
    assert s.lambda_max == 1.0 and s.lambda_min == 0.0


def test_schmidt_bell_state():
    psi = (np.kron([1.0, 0.0], [1.0, 0.0]) + np.kron([0.0, 1.0], [0.0, 1.0])) / math.sqrt(2)
    np.testing.assert_allclose(schmidt_spectrum(psi, 2, 2).values, [0.5, 0.5], atol=1e-15)


def test_schmidt_reshape_convention_slowest_index_first():
    # |0>_A (|0> + |1>)_B / sqrt2 on a 2 x 4 cut: subsystem A is the leading bit
    psi = np.zeros(8)
    psi[[0, 1]] = 1 / math.sqrt(2)
    s = schmidt_spectrum(psi, 2, 4)
    np.testing.assert_allclose(s.values, [1.0, 0.0], atol=1e-15)


def test_schmidt_mean_lambda_max_d64():
    # asymptotic edge 4/D at 2% as quoted for D = 64
    rng = np.random.default_rng(0)
    g = rng.standard_normal((10_000, 64 * 64))
    g /= np.linalg.norm(g, axis=1)[:, None]
    lam = schmidt_spectra(g.T, 64, 64)[:, 0]
    assert lam.mean() == pytest.approx(4 / 64, rel=0.02)


def test_schmidt_mean_lambda_max_d64_finite_size():
    # at D = 64 the mean sits below the edge by the Tracy-Widom mean shift
    rng = np.random.default_rng(0)
    g = rng.standard_normal((10_000, 64 * 64))
    g /= np.linalg.norm(g, axis=1)[:, None]
    lam = schmidt_spectra(g.T, 64, 64)[:, 0]
    c, s = laws.johnstone_center_scale(64)
    assert lam.mean() == pytest.approx(c + s * (-1.2065335745820), rel=0.02)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(1, 1), (2, 2), (2, 8), (8, 2), (4, 4), (16, 16), (3, 5)]), st.integers(0, 2 ** 32))
def test_schmidt_invariants(dims, seed):
    d1, d2 = dims
    psi = _unit(np.random.default_rng(seed), d1 * d2)
    s = schmidt_spectrum(psi, d1, d2)
    assert len(s) == min(d1, d2)
    assert s.values.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(s.values >= 0)
    assert np.all(np.diff(s.values) <= 1e-15)
    assert 1 / min(d1, d2) - 1e-12 <= s.lambda_max <= 1 + 1e-12
    np.testing.assert_allclose(schmidt_spectrum(-psi, d1, d2).values, s.values, atol=1e-14)


def test_schmidt_spectra_matches_single():
    rng = np.random.default_rng(5)
    states = np.stack([_unit(rng, 32) for _ in range(6)], axis=1)
    many = schmidt_spectra(states, 4, 8)
    for j in range(6):
        np.testing.assert_allclose(many[j], schmidt_spectrum(states[:, j], 4, 8).values, atol=1e-14)


def test_schmidt_errors():
    with pytest.raises(ValueError):
        schmidt_spectrum(np.ones(6) / math.sqrt(6), 2, 2)
    with pytest.raises(ValueError):
        schmidt_spectrum(np.ones(4), 2, 2)
    with pytest.raises(DomainError):
        SchmidtSpectrum(np.array([1.0, -1e-10]), (2, 1))


def test_schmidt_clips_roundoff_negatives():
    s = SchmidtSpectrum(np.array([1.0, -1e-16]), (2, 2))
    assert s.values[-1] == 0.0


def test_rescale_examples():
    e = np.zeros(64)
    e[0] = 1.0
    assert rescale_schmidt(SchmidtSpectrum(e, (64, 64))).max() == 64
    np.testing.assert_allclose(rescale_schmidt(SchmidtSpectrum(np.full(64, 1 / 64), (64, 64))), 1.0)
    with pytest.raises(DomainError):
        rescale_schmidt(SchmidtSpectrum(np.array([1.0, 0.0]), (2, 4)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_rescaled_mean_is_one(seed):
    psi = _unit(np.random.default_rng(seed), 256)
    x = rescale_schmidt(schmidt_spectrum(psi, 16, 16))
    assert x.mean() == pytest.approx(1.0, abs=1e-10)


# --- extreme eigenvalues ----------------------------------------------------------------------


def test_extreme_diag():
    m = np.diag([5.0, -2.0, 0.0])
    assert extreme_eigenvalue(m, "max") == pytest.approx(5.0, abs=1e-14)
    assert extreme_eigenvalue(m, "min") == pytest.approx(-2.0, abs=1e-14)


def test_extreme_matches_full_goe100():
    rng = np.random.default_rng(11)
    for _ in range(100):
        a = sample_goe(100, rng)
        w = np.linalg.eigvalsh(a)
        assert extreme_eigenvalue(a, "max") == pytest.approx(w[-1], rel=1e-8, abs=0)
        assert extreme_eigenvalue(a, "min") == pytest.approx(w[0], rel=1e-8, abs=0)


def test_extreme_lanczos_path_matches_full():
    rng = np.random.default_rng(2)
    a = sample_goe(1500, rng)
    w = np.linalg.eigvalsh(a)
    assert extreme_eigenvalue(sp.csr_matrix(a), "max") == pytest.approx(w[-1], rel=1e-8, abs=0)
    op = spla.aslinearoperator(a)
    assert extreme_eigenvalue(op, "min") == pytest.approx(w[0], rel=1e-8, abs=0)


def test_extreme_rayleigh_bound():
    rng = np.random.default_rng(4)
    a = sample_goe(300, rng)
    top = extreme_eigenvalue(a, "max")
    for _ in range(100):
        v = _unit(rng, 300)
        assert top >= v @ a @ v


def test_extreme_wishart_2048_edge():
    n = 2048
    rng = np.random.default_rng(0)
    ratios = []
    for _ in range(100):
        g = rng.standard_normal((n, n))
        op = spla.LinearOperator((n, n), matvec=lambda x, g=g: g @ (g.T @ x), dtype=float)
        ratios.append(extreme_eigenvalue(op, "max", tol=1e-10) / (math.sqrt(n - 1) + math.sqrt(n)) ** 2)
    assert np.mean(ratios) == pytest.approx(1.0, rel=0.02)


# --- spacing ratios ---------------------------------------------------------------------------


def test_spacing_ratio_example():
    np.testing.assert_allclose(spacing_ratios([0.0, 1.0, 3.0]), [0.5])


def test_spacing_ratio_poisson():
    rng = np.random.default_rng(0)
    r = np.concatenate([spacing_ratios(rng.uniform(size=10_000)) for _ in range(20)])
    assert r.mean() == pytest.approx(2 * math.log(2) - 1, abs=0.005)


def test_spacing_ratio_degeneracy_merge():
    r = spacing_ratios([0.0, 1.0, 1.0 + 1e-16, 3.0])
    np.testing.assert_allclose(r, [0.5])


@settings(max_examples=30)
@given(st.lists(st.floats(-100, 100), min_size=3, max_size=40, unique=True))
def test_spacing_ratio_range(levels):
    try:
        r = spacing_ratios(levels)
    except ValueError:
        return
    assert np.all((r >= 0) & (r <= 1))


def test_spacing_ratio_too_short():
    with pytest.raises(ValueError):
        spacing_ratios([0.0, 1.0])


# --- eigenvector components ---------------------------------------------------------------------


def test_components_unit_vector():
    es = EigenSystem(np.zeros(4), np.eye(4))
    np.testing.assert_allclose(eigenvector_components(es, [0]), [2, 0, 0, 0])


def test_components_norm():
    es = full_eigh(sample_goe(128, np.random.default_rng(1)))
    x = eigenvector_components(es, [60])
    assert np.sum(x * x) == pytest.approx(128.0, abs=1e-10)


def test_components_window_offset_and_range():
    a = sample_goe(32, np.random.default_rng(6))
    win = window_eigh(a, 4)
    full = full_eigh(a)
    x = eigenvector_components(win, [win.offset + 1])
    y = eigenvector_components(full, [win.offset + 1])
    np.testing.assert_allclose(np.abs(x), np.abs(y), atol=1e-10)
    with pytest.raises(IndexError):
        eigenvector_components(win, [0])


# --- SchmidtTransformer -------------------------------------------------------------------------


def test_transformer_matches_function():
    rng = np.random.default_rng(0)
    X = np.stack([_unit(rng, 16) for _ in range(5)])
    t = SchmidtTransformer(d1=4, d2=4).fit(X)
    out = t.transform(X)
    assert out.shape == (5, 4)
    for i in range(5):
        np.testing.assert_allclose(out[i], schmidt_spectrum(X[i], 4, 4).values, atol=1e-14)
    np.testing.assert_allclose(SchmidtTransformer(4, 4, rescale=True).fit_transform(X), 4 * out)


def test_transformer_sklearn_protocol():
    t = SchmidtTransformer(d1=2, d2=8, rescale=False)
    assert t.get_params() == {"d1": 2, "d2": 8, "rescale": False}
    c = clone(t).set_params(d1=4, d2=4)
    assert c.get_params()["d1"] == 4
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        t.transform(np.ones((1, 16)) / 4)
    with pytest.raises(ValueError):
        t.fit(np.ones((1, 15)))
    with pytest.raises(DomainError):
        SchmidtTransformer(2, 8, rescale=True).fit(np.ones((1, 16)) / 4)
    t.fit(np.ones((1, 16)) / 4)
    with pytest.raises(ValueError):
        t.transform(np.ones((1, 8)))
