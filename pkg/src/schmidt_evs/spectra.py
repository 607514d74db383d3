"""Eigendecomposition, Schmidt spectra and level statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ConvergenceError, DomainError

__all__ = [
    "SchmidtSpectrum",
    "EigenSystem",
    "Extreme",
    "full_eigh",
    "window_eigh",
    "mid_spectrum_window",
    "mid_spectrum_states",
    "schmidt_spectrum",
    "schmidt_spectra",
    "rescale_schmidt",
    "extreme_eigenvalue",
    "spacing_ratios",
    "eigenvector_components",
    "SchmidtTransformer",
]

_NEG_TOL = 1e-14
_NORM_TOL = 1e-10


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Descending eigenvalues of a reduced density matrix."""

    values: np.ndarray
    subsystem_dims: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size and v.min() < -_NEG_TOL:
            raise DomainError(f"negative Schmidt eigenvalue {v.min():.3e}")
        object.__setattr__(self, "values", np.clip(v, 0.0, None))
        object.__setattr__(self, "subsystem_dims", tuple(int(x) for x in self.subsystem_dims))

    @property
    def lambda_max(self):
        return float(self.values[0])

    @property
    def lambda_min(self):
        return float(self.values[-1])

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues with optional eigenvector columns.

    ``offset`` is the global index of the first stored eigenvalue, non-zero
    when only a window of the spectrum was computed.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    order: int | None = None
    offset: int = 0

    @property
    def n_order(self):
        return self.order if self.order is not None else len(self.eigenvalues)


def _as_dense(m):
    if sp.issparse(m):
        return m.toarray()
    if hasattr(m, "toarray"):
        return m.toarray()
    return np.asarray(m, dtype=float)


def full_eigh(m, want_vectors=True):
    """All eigenpairs of a real symmetric matrix, eigenvalues ascending."""
    a = _as_dense(m)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if want_vectors:
        w, v = np.linalg.eigh(a)
        return EigenSystem(w, v, order=a.shape[0])
    return EigenSystem(np.linalg.eigvalsh(a), None, order=a.shape[0])


def mid_spectrum_window(order, count):
    """Half-open index range of ``count`` levels centred on ``order // 2``."""
    if count < 1 or count > order:
        raise ValueError(f"count must lie in [1, {order}], got {count}")
    lo = (order - count) // 2
    return lo, lo + count


def window_eigh(m, count, want_vectors=True):
    """Eigenpairs of the ``count`` levels in the middle of the spectrum.

    Uses LAPACK's index-selected driver, which avoids back-transforming the
    full eigenvector matrix.
    """
    a = _as_dense(m)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    lo, hi = mid_spectrum_window(a.shape[0], count)
    if count == a.shape[0]:
        es = full_eigh(a, want_vectors)
        return es
    out = sla.eigh(a, eigvals_only=not want_vectors, subset_by_index=[lo, hi - 1],
                   driver="evr", overwrite_a=False, check_finite=False)
    if want_vectors:
        w, v = out
        return EigenSystem(w, v, order=a.shape[0], offset=lo)
    return EigenSystem(out, None, order=a.shape[0], offset=lo)


def mid_spectrum_states(es, count):
    """Eigenvector columns of the ``count`` mid-spectrum states."""
    if es.eigenvectors is None:
        raise ValueError("eigen system carries no eigenvectors")
    lo, hi = mid_spectrum_window(es.n_order, count)
    lo -= es.offset
    hi -= es.offset
    if lo < 0 or hi > es.eigenvectors.shape[1]:
        raise ValueError("requested window is not contained in the computed eigenvectors")
    return es.eigenvectors[:, lo:hi]


def _check_state_dims(n, d1, d2):
    if d1 < 1 or d2 < 1 or d1 * d2 != n:
        raise ValueError(f"state of length {n} does not factor as {d1} x {d2}")


def schmidt_spectrum(state, d1, d2):
    """Schmidt spectrum of a normalized real state on a d1 x d2 bipartition.

    The first subsystem is the slowest-varying index, i.e. the state is
    reshaped row-major into a d1 x d2 coefficient matrix ``C`` and the
    eigenvalues of ``C C^T`` are returned in descending order.
    """
    state = np.asarray(state, dtype=float).ravel()
    _check_state_dims(state.size, d1, d2)
    norm = float(state @ state)
    if abs(norm - 1.0) > _NORM_TOL:
        raise ValueError(f"state is not normalized (|psi|^2 = {norm:.12f})")
    sv = np.linalg.svd(state.reshape(d1, d2), compute_uv=False)
    return SchmidtSpectrum(sv * sv, (d1, d2))


def schmidt_spectra(states, d1, d2):
    """Schmidt spectra of many states given as columns of ``states``.

    Returns an array of shape (n_states, min(d1, d2)), rows descending.
    """
    states = np.asarray(states, dtype=float)
    _check_state_dims(states.shape[0], d1, d2)
    norms = np.einsum("ij,ij->j", states, states)
    if np.any(np.abs(norms - 1.0) > _NORM_TOL):
        raise ValueError("states are not normalized")
    c = states.T.reshape(states.shape[1], d1, d2)
    sv = np.linalg.svd(c, compute_uv=False)
    return sv * sv


def rescale_schmidt(s):
    """Schmidt values multiplied by the subsystem dimension D (square cuts only)."""
    d1, d2 = s.subsystem_dims
    if d1 != d2:
        raise DomainError("rescaling is defined for square bipartitions only")
    return d1 * s.values


class Extreme(str, Enum):
    MAX = "max"
    MIN = "min"


_DENSE_CUTOFF = 512


def extreme_eigenvalue(m, which, tol=1e-12, maxiter=None, v0=None):
    """Largest or smallest eigenvalue of a symmetric matrix.

    Small matrices go through a selected-index LAPACK solve; larger ones
    through implicitly restarted Lanczos (ARPACK). ``v0`` fixes the Krylov
    starting vector, which makes the Lanczos path reproducible.
    """
    which = Extreme(which)
    order = m.shape[0]
    operator = isinstance(m, spla.LinearOperator)
    if not operator and (order <= _DENSE_CUTOFF or (not sp.issparse(m) and order <= 2 * _DENSE_CUTOFF)):
        a = _as_dense(m)
        idx = order - 1 if which is Extreme.MAX else 0
        return float(sla.eigh(a, eigvals_only=True, subset_by_index=[idx, idx], check_finite=True)[0])
    if v0 is None:
        v0 = np.ones(order) / math.sqrt(order)
    try:
        vals = spla.eigsh(m, k=1, which="LA" if which is Extreme.MAX else "SA", tol=tol,
                          maxiter=maxiter, v0=v0, return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        partial = exc.eigenvalues[0] if len(exc.eigenvalues) else None
        raise ConvergenceError("Lanczos did not converge", partial=partial) from exc
    return float(vals[0])


def spacing_ratios(eigenvalues, degeneracy_tol=1e-13):
    """Consecutive-gap ratios min(s_i, s_i+1) / max(s_i, s_i+1).

    Gaps below ``degeneracy_tol * max|E|`` are treated as degenerate levels and
    merged before the ratios are formed.
    """
    e = np.sort(np.asarray(eigenvalues, dtype=float))
    if e.size < 3:
        raise ValueError("need at least 3 levels")
    scale = max(float(np.max(np.abs(e))), np.finfo(float).tiny)
    gaps = np.diff(e)
    gaps = gaps[gaps > degeneracy_tol * scale]
    if gaps.size < 2:
        raise ValueError("fewer than 3 distinct levels after merging degeneracies")
    a, b = gaps[:-1], gaps[1:]
    return np.minimum(a, b) / np.maximum(a, b)


def eigenvector_components(es, state_indices):
    """Components sqrt(D) * psi of the selected eigenvectors, concatenated."""
    if es.eigenvectors is None:
        raise ValueError("eigen system carries no eigenvectors")
    idx = np.atleast_1d(np.asarray(state_indices, dtype=int)) - es.offset
    if idx.size and (idx.min() < 0 or idx.max() >= es.eigenvectors.shape[1]):
        raise IndexError("state index out of range")
    d = es.eigenvectors.shape[0]
    return math.sqrt(d) * es.eigenvectors[:, idx].T.ravel()


class SchmidtTransformer(TransformerMixin, BaseEstimator):
    """Map pure states (rows of X) to their Schmidt spectra.

    Parameters
    ----------
    d1, d2 : int
        Bipartition dimensions; the first factor is the slowest index.
    rescale : bool
        Multiply by the subsystem dimension (square cuts only).
    """

    def __init__(self, d1=64, d2=64, rescale=False):
        self.d1 = d1
        self.d2 = d2
        self.rescale = rescale

    def fit(self, X, y=None):
        X = check_array(X)
        _check_state_dims(X.shape[1], self.d1, self.d2)
        if self.rescale and self.d1 != self.d2:
            raise DomainError("rescaling is defined for square bipartitions only")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        spectra = schmidt_spectra(X.T, self.d1, self.d2)
        return self.d1 * spectra if self.rescale else spectra
