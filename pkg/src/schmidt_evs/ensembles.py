"""Random-matrix and Hamiltonian samplers.

Conventions
-----------
* GOE blocks are ``(M + M.T) / sqrt(2)`` with standard-normal ``M``:
  off-diagonal variance 1, diagonal variance 2.
* Basis states of ``N + L`` spins are integers; tensor factor 0 is the most
  significant bit. In the Quantum Sun model the dot occupies factors
  ``0 .. N-1`` and outside spin ``j`` is factor ``N + j``.
* Every sampler takes an explicit :class:`numpy.random.Generator`; seeding is
  handled by :meth:`EnsembleSpec.rng`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvalsh_tridiagonal

from .exceptions import ConfigError, ResourceLimitError
from .spectra import SchmidtSpectrum

__all__ = [
    "EnsembleKind",
    "EnsembleSpec",
    "SparseSymmetricMatrix",
    "MAX_ORDER",
    "realization_rng",
    "sample_goe",
    "build_ultrametric",
    "build_qsm",
    "qsm_nnz_bound",
    "sample_trace_wishart",
    "laguerre_bidiagonal",
    "wishart_lambda_max_bidiagonal",
]

#: Largest Hilbert-space dimension the builders accept.
MAX_ORDER = 2 ** 14


class EnsembleKind(str, Enum):
    GOE = "goe"
    WISHART = "wishart"
    ULTRAMETRIC = "um"
    QUANTUM_SUN = "qsm"


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    N: int = 1
    L: int = 11
    alpha: float = 0.9
    J: float = 1.0
    gamma: float = 1.0
    epsilon: float = 0.2
    field_center: float = 1.0
    field_halfwidth: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind(self.kind))
        if self.N < 0 or self.L < 0 or int(self.N) != self.N or int(self.L) != self.L:
            raise ConfigError("N and L must be non-negative integers")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if not 0.0 <= self.epsilon < 0.5:
            raise ConfigError("epsilon must lie in [0, 0.5)")
        if self.field_halfwidth < 0:
            raise ConfigError("field half-width must be non-negative")
        if self.J <= 0 or self.gamma <= 0:
            raise ConfigError("J and gamma must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def n_spins(self):
        return self.N + self.L

    @property
    def dim(self):
        return 2 ** (self.N + self.L)

    def to_dict(self):
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    def rng(self, index=None):
        """Generator for the whole spec, or for one realization ``index``."""
        if index is None:
            return np.random.default_rng(self.seed)
        return realization_rng(self.seed, index)


def realization_rng(seed, index):
    """Independent stream keyed on (master seed, realization index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(index),)))


def _check_order(order):
    if order > MAX_ORDER:
        raise ResourceLimitError(f"order {order} exceeds MAX_ORDER={MAX_ORDER}")


def sample_goe(n, rng):
    """Dense GOE matrix of order ``n`` (off-diagonal variance 1, diagonal 2)."""
    if n < 1:
        raise ValueError("GOE order must be >= 1")
    _check_order(n)
    m = rng.standard_normal((n, n))
    return (m + m.T) / math.sqrt(2.0)


def build_ultrametric(spec, rng=None):
    """Ultrametric random matrix ``H0 + J sum_j alpha^j H_j``.

    Level ``j`` is block diagonal with ``2^(L-j)`` independent GOE blocks of
    order ``2^(N+j)``, each divided by ``sqrt(2^(N+j) + 1)``.
    """
    if spec.kind is not EnsembleKind.ULTRAMETRIC:
        raise ConfigError("build_ultrametric needs an ultrametric spec")
    rng = spec.rng() if rng is None else rng
    order = spec.dim
    _check_order(order)
    h = np.zeros((order, order))
    for level in range(spec.L + 1):
        size = 2 ** (spec.N + level)
        weight = 1.0 / math.sqrt(size + 1.0)
        if level > 0:
            weight *= spec.J * spec.alpha ** level
        if weight == 0.0:
            continue
        for start in range(0, order, size):
            block = sample_goe(size, rng)
            h[start:start + size, start:start + size] += weight * block
    return h


@dataclass(frozen=True)
class SparseSymmetricMatrix:
    """Upper-triangle coordinate storage of a real symmetric matrix."""

    order: int
    row: np.ndarray
    col: np.ndarray
    data: np.ndarray

    @property
    def nnz(self):
        return int(self.data.size)

    def tocsr(self):
        """Full symmetric CSR matrix."""
        upper = sp.coo_matrix((self.data, (self.row, self.col)), shape=(self.order,) * 2)
        strict = sp.coo_matrix(
            (self.data[self.row != self.col], (self.col[self.row != self.col], self.row[self.row != self.col])),
            shape=(self.order,) * 2,
        )
        return (upper + strict).tocsr()

    def toarray(self):
        out = np.zeros((self.order, self.order))
        out[self.row, self.col] = self.data
        out[self.col, self.row] = self.data
        return out

    def matvec(self, x):
        return self.tocsr() @ x


def qsm_nnz_bound(N, L):
    dot = 2 ** N * 2 ** N * 2 ** L // 2
    return dot + L * 2 ** (N + L) // 2 + 2 ** (N + L)


def build_qsm(spec, rng=None):
    """Quantum Sun Hamiltonian in sparse upper-triangle form.

    ``H = H_dot + sum_j alpha^u_j Sx_{n_j} Sx_j + sum_j h_j Sz_j`` with
    spin-1/2 operators, ``H_dot = gamma / sqrt(2^N + 1) * GOE(2^N)`` on the dot,
    ``u_0 = 0`` and ``u_j ~ U[j - eps, j + eps]`` otherwise, dot partner
    ``n_j`` uniform over the dot spins and ``h_j ~ U[S - dS, S + dS]``.
    """
    if spec.kind is not EnsembleKind.QUANTUM_SUN:
        raise ConfigError("build_qsm needs a quantum-sun spec")
    if spec.N < 1 or spec.L < 1:
        raise ConfigError("the quantum sun needs N >= 1 dot spins and L >= 1 outside spins")
    rng = spec.rng() if rng is None else rng
    N, L = spec.N, spec.L
    n_spins = N + L
    order = spec.dim
    _check_order(order)
    dot_dim, out_dim = 2 ** N, 2 ** L

    h_dot = spec.gamma / math.sqrt(dot_dim + 1.0) * sample_goe(dot_dim, rng)
    shifts = np.full(L, spec.epsilon)
    shifts[0] = 0.0
    u = rng.uniform(np.arange(L) - shifts, np.arange(L) + shifts)
    partner = rng.integers(0, N, size=L)
    fields = rng.uniform(spec.field_center - spec.field_halfwidth,
                         spec.field_center + spec.field_halfwidth, size=L)
    # 0**0 is 1 in numpy, which is the intended u_0 = 0 coupling at alpha = 0.
    couplings = np.power(spec.alpha, u)

    rows, cols, vals = [], [], []

    # Dot term: H_dot (x) I_out, dot index is the high part of the basis index.
    iu, ju = np.triu_indices(dot_dim)
    dot_vals = h_dot[iu, ju]
    keep = dot_vals != 0.0
    iu, ju, dot_vals = iu[keep], ju[keep], dot_vals[keep]
    rest = np.arange(out_dim)
    rows.append((iu[:, None] * out_dim + rest[None, :]).ravel())
    cols.append((ju[:, None] * out_dim + rest[None, :]).ravel())
    vals.append(np.repeat(dot_vals, out_dim))

    basis = np.arange(order)

    def bit(factor):
        return n_spins - 1 - factor

    # Fields: diagonal h_j * (+-1/2).
    diag = np.zeros(order)
    for j in range(L):
        up = (basis >> bit(N + j)) & 1
        diag += fields[j] * (0.5 - up)
    rows.append(basis)
    cols.append(basis)
    vals.append(diag)

    # Couplings: Sx Sx flips both spins with amplitude 1/4.
    for j in range(L):
        if couplings[j] == 0.0:
            continue
        mask = (1 << bit(int(partner[j]))) | (1 << bit(N + j))
        partner_state = basis ^ mask
        upper = basis < partner_state
        rows.append(basis[upper])
        cols.append(partner_state[upper])
        vals.append(np.full(int(upper.sum()), 0.25 * couplings[j]))

    row = np.concatenate(rows)
    col = np.concatenate(cols)
    data = np.concatenate(vals)
    # Diagonal entries of the dot term and the fields coincide; sum them.
    merged = sp.coo_matrix((data, (row, col)), shape=(order, order)).tocsr()
    merged.sum_duplicates()
    coo = merged.tocoo()
    nz = coo.data != 0.0
    return SparseSymmetricMatrix(order, coo.row[nz].astype(np.int64), coo.col[nz].astype(np.int64), coo.data[nz])


def sample_trace_wishart(d, rng):
    """Spectrum of ``G G^T / Tr(G G^T)`` for a d x d standard-normal ``G``."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    g = rng.standard_normal((d, d))
    sv = np.linalg.svd(g, compute_uv=False)
    lam = sv * sv
    return SchmidtSpectrum(lam / lam.sum(), (d, d))


def laguerre_bidiagonal(n, m, rng):
    """Bidiagonal model whose ``B B^T`` has the eigenvalue law of a real n x m Wishart.

    Returns (diagonal, subdiagonal) of the lower-bidiagonal ``B`` with chi
    distributed entries of ``m - i`` and ``n - 1 - i`` degrees of freedom.
    """
    if m < n:
        raise ValueError("need m >= n")
    diag = np.sqrt(rng.chisquare(m - np.arange(n)))
    sub = np.sqrt(rng.chisquare(n - 1 - np.arange(n - 1))) if n > 1 else np.empty(0)
    return diag, sub


def wishart_lambda_max_bidiagonal(n, rng, m=None, trace_normalize=False):
    """Largest eigenvalue of a real n x m Wishart matrix via its tridiagonal model."""
    m = n if m is None else m
    d, e = laguerre_bidiagonal(n, m, rng)
    t_diag = d * d
    t_diag[1:] += e * e
    t_off = e * d[:-1]
    lam = float(eigvalsh_tridiagonal(t_diag, t_off, select="i", select_range=(n - 1, n - 1))[0])
    if trace_normalize:
        lam /= float(t_diag.sum())
    return lam
