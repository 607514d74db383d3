"""Seeded, parallel experiment execution and aggregation."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .. import __version__, laws
from ..ensembles import (
    EnsembleKind,
    EnsembleSpec,
    build_qsm,
    build_ultrametric,
    realization_rng,
    sample_goe,
)
from ..exceptions import ConfigError, RealizationError
from ..fitting import GEVEstimator, GHDEstimator
from ..spectra import extreme_eigenvalue, schmidt_spectra, spacing_ratios, window_eigh
from ..stats import histogram, histogram_from_counts, ks_distance
from .config import ExperimentConfig, Pipeline, resolve_threads

__all__ = ["ExperimentResult", "run_experiment", "table1", "histogram_table", "SEED_SCHEME"]

SEED_SCHEME = "numpy SeedSequence(entropy=seed, spawn_key=(realization_index,)) -> PCG64"

# Raw eigenvector components are kept (for exact KS statistics) up to this count.
_RAW_COMPONENT_LIMIT = 2 ** 24
_MP_WINDOW = (0.2, 3.8)
_LMIN_ORDERS = 5
_ROOT_MOMENT_ORDERS = 12


@dataclass
class ExperimentResult:
    """Everything an experiment produced, as plain JSON-compatible values.

    ``aggregates`` maps a table name to ``{"columns": {name: list},
    "sample_count": n}``; ``fits`` holds fitted parameter records and
    ``summary`` scalar statistics. ``wall_time`` is informational and is not
    persisted, so that result files stay byte-identical between runs.
    """

    config_hash: str
    seed: int
    version: str
    config: dict
    aggregates: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    overlays: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    wall_time: float = field(default=0.0, compare=False)

    def column(self, table, name):
        return np.asarray(self.aggregates[table]["columns"][name], dtype=float)

    def distribution(self, table):
        """Rebuild the :class:`EmpiricalDistribution` of a histogram table."""
        cols = self.aggregates[table]["columns"]
        edges = np.append(np.asarray(cols["bin_left"], float), float(cols["bin_right"][-1]))
        return histogram_from_counts(np.asarray(cols["count"], dtype=np.int64), edges)


def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def histogram_table(dist):
    return {
        "bin_left": _floats(dist.bin_edges[:-1]),
        "bin_right": _floats(dist.bin_edges[1:]),
        "count": [int(c) for c in dist.counts],
        "density": _floats(dist.density),
    }


def _table(columns, n):
    return {"columns": columns, "sample_count": int(n)}


# --- per-realization work --------------------------------------------------------


def _hamiltonian(spec, rng):
    if spec.kind is EnsembleKind.GOE:
        return sample_goe(spec.dim, rng)
    if spec.kind is EnsembleKind.ULTRAMETRIC:
        return build_ultrametric(spec, rng)
    return build_qsm(spec, rng).toarray()


def _component_partial(cfg, vectors, keep_raw):
    d = vectors.shape[0]
    x = math.sqrt(d) * vectors.ravel()
    r = cfg.component_range
    counts, _ = np.histogram(x, bins=cfg.component_bins, range=(-r, r))
    x2 = x * x
    out = {
        "counts": counts.astype(np.int64),
        "overflow": int(np.count_nonzero(np.abs(x) >= r)),
        "power_sums": np.array([x.size, x.sum(), x2.sum(), (x2 * x).sum(), (x2 * x2).sum()]),
    }
    if keep_raw:
        out["raw"] = x
    return out


def _hamiltonian_realization(cfg, index, keep_raw):
    spec = cfg.ensemble
    rng = realization_rng(spec.seed, index)
    h = _hamiltonian(spec, rng)
    pipes = set(cfg.pipelines)
    want_vectors = bool(pipes - {Pipeline.SPACING_RATIOS})
    es = window_eigh(h, cfg.states_per_realization, want_vectors=want_vectors)
    out = {}
    if Pipeline.SPACING_RATIOS in pipes:
        out["ratios"] = spacing_ratios(es.eigenvalues)
    if want_vectors:
        v = es.eigenvectors
        if Pipeline.EIGVEC_COMPONENTS in pipes:
            out["components"] = _component_partial(cfg, v, keep_raw)
        if pipes & {Pipeline.SCHMIDT_DENSITY, Pipeline.MAX_EIG, Pipeline.MIN_EIG}:
            out["schmidt"] = schmidt_spectra(v, *cfg.bipartition)
    return out


def _wishart_chunk(cfg, indices):
    d1, d2 = cfg.bipartition
    seed = cfg.ensemble.seed
    g = np.empty((len(indices), d1, d2))
    for k, i in enumerate(indices):
        g[k] = realization_rng(seed, i).standard_normal((d1, d2))
    sv = np.linalg.svd(g, compute_uv=False)
    lam = sv * sv
    lam /= lam.sum(axis=1, keepdims=True)
    return [{"schmidt": row} for row in lam]


def _tw_realization(cfg, index):
    d1, d2 = cfg.bipartition
    g = realization_rng(cfg.ensemble.seed, index).standard_normal((d1, d2))
    op = spla.LinearOperator((d1, d1), matvec=lambda x: g @ (g.T @ x), dtype=float)
    lam = extreme_eigenvalue(op, "max", tol=1e-10)
    return {"tw_lambda_max": np.array([lam / float(np.einsum("ij,ij->", g, g))])}


def _realize(cfg, indices, keep_raw):
    if cfg.ensemble.kind is not EnsembleKind.WISHART:
        return [_hamiltonian_realization(cfg, i, keep_raw) for i in indices]
    out = []
    if Pipeline.TW_LARGE_D in cfg.pipelines:
        out = [_tw_realization(cfg, i) for i in indices]
    if set(cfg.pipelines) - {Pipeline.TW_LARGE_D}:
        dense = _wishart_chunk(cfg, indices)
        out = dense if not out else [dict(a, **b) for a, b in zip(out, dense)]
    return out


def _run_chunk(cfg, indices, keep_raw):
    try:
        return _realize(cfg, indices, keep_raw)
    except Exception as exc:
        failing = indices[0]
        # Batched chunks: replay one by one to name the failing realization.
        if len(indices) > 1:
            for i in indices:
                try:
                    _realize(cfg, [i], keep_raw)
                except Exception:
                    failing = i
                    break
        raise RealizationError(f"{type(exc).__name__}: {exc}", failing, cfg.ensemble.seed) from exc


def _chunks(cfg):
    n = cfg.realizations
    if cfg.chunk_size is not None:
        size = int(cfg.chunk_size)
    elif cfg.ensemble.kind is EnsembleKind.WISHART and Pipeline.TW_LARGE_D not in cfg.pipelines:
        size = 1000
    else:
        size = 1
    if size < 1:
        raise ConfigError("chunk_size must be positive")
    return [list(range(s, min(s + size, n))) for s in range(0, n, size)]


def _execute(cfg, keep_raw, order=None):
    chunks = _chunks(cfg)
    threads = resolve_threads(cfg.threads)
    if order is not None:
        chunks = [chunks[i] for i in order]
    if threads == 1 or len(chunks) == 1:
        partials = [(c[0], _run_chunk(cfg, c, keep_raw)) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(lambda c: _run_chunk(cfg, c, keep_raw), chunks)
            partials = [(c[0], r) for c, r in zip(chunks, results)]
    # Merge in realization order, whatever order the work ran in.
    partials.sort(key=lambda p: p[0])
    return [item for _, chunk in partials for item in chunk]


# --- aggregation -------------------------------------------------------------------


def _bin_average_cdf_density(cdf, edges):
    return np.diff(cdf(edges)) / np.diff(edges)


def _summarize_components(cfg, res, parts):
    counts = np.sum([p["counts"] for p in parts], axis=0)
    power = np.sum([p["power_sums"] for p in parts], axis=0)
    overflow = int(sum(p["overflow"] for p in parts))
    r = cfg.component_range
    edges = np.linspace(-r, r, cfg.component_bins + 1)
    dist = histogram_from_counts(counts, edges, power_sums=power)
    n = int(power[0])
    res.aggregates["components_histogram"] = _table(histogram_table(dist), n)

    est = GHDEstimator(standardize=False).fit_counts(counts, edges)
    ghd = est.result()
    res.fits["ghd"] = ghd.to_dict()

    p = counts / counts.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        pn = np.diff(laws.normal_cdf(edges))
        nll_normal = -float(np.sum(counts[counts > 0] * np.log(pn[counts > 0])))
    if "raw" in parts[0]:
        x = np.concatenate([q["raw"] for q in parts])
        ks_normal = ks_distance(x, laws.normal_cdf)
        ks_pt = ks_distance(x * x, laws.porter_thomas_cdf)
        ks_exact = True
    else:
        cum = np.concatenate([[0.0], np.cumsum(p)])
        ks_normal = float(np.max(np.abs(cum - laws.normal_cdf(edges))))
        half = cfg.component_bins // 2
        pos = edges[half:]
        inside = np.array([p[half - k:half + k].sum() for k in range(pos.size)])
        ks_pt = float(np.max(np.abs(inside - laws.porter_thomas_cdf(pos * pos))))
        ks_exact = False
    res.summary["components"] = {
        "sample_count": n,
        "overflow": overflow,
        "mean": float(power[1] / n),
        "variance": float(power[2] / n - (power[1] / n) ** 2),
        "kurtosis": float(power[4] / n / (power[2] / n) ** 2),
        "ks_normal": ks_normal,
        "ks_porter_thomas": ks_pt,
        "ks_exact": ks_exact,
        "nll_ghd_binned": ghd.neg_log_likelihood,
        "nll_normal_binned": nll_normal,
    }
    res.overlays["components_histogram"] = [
        {"law": "ghd", "b": ghd.b, "xi": ghd.xi},
        {"law": "normal"},
    ]


def _summarize_schmidt(cfg, res, spectra):
    d = cfg.bipartition[0]
    x = d * spectra.ravel() if cfg.square else spectra.ravel()
    n = x.size
    if cfg.square:
        dist = histogram(x, range=(0.0, max(4.0, float(x.max()) * (1 + 1e-12))))
        mp_bin = _bin_average_cdf_density(lambda t: laws.mp_cdf(np.clip(t, 0.0, 4.0)), dist.bin_edges)
        c = dist.centers
        window = (c >= _MP_WINDOW[0]) & (c <= _MP_WINDOW[1])
        ks = ks_distance(x, lambda t: laws.mp_cdf(np.clip(t, 0.0, 4.0)))
        sup_err = float(np.max(np.abs(dist.density[window] - mp_bin[window])))
        orders = np.arange(1, _ROOT_MOMENT_ORDERS + 1)
        emp = [float(np.mean(x ** k) ** (1.0 / k)) for k in orders]
        ana = [float(laws.mp_moment(int(k)) ** (1.0 / k)) for k in orders]
        res.aggregates["root_moments"] = _table(
            {"k": [int(k) for k in orders], "empirical": emp, "mp": ana}, n)
        res.summary["schmidt"] = {"sample_count": n, "ks_mp": ks, "mp_sup_density_error": sup_err,
                                  "mean": float(np.mean(x))}
        res.overlays["schmidt_histogram"] = [{"law": "mp"}]
    else:
        dist = histogram(x)
        res.summary["schmidt"] = {"sample_count": n, "mean": float(np.mean(x))}
    res.aggregates["schmidt_histogram"] = _table(histogram_table(dist), n)


def _summarize_max(cfg, res, lam_max):
    n = lam_max.size
    res.aggregates["lambda_max"] = _table({"value": _floats(lam_max)}, n)
    est = GEVEstimator(random_state=cfg.fit_seed).fit(lam_max)
    gev = est.result()
    res.fits["gev"] = gev.to_dict()
    res.aggregates["lambda_max_histogram"] = _table(histogram_table(histogram(lam_max)), n)
    res.overlays["lambda_max_histogram"] = [
        {"law": "gev", "location": gev.location, "scale": gev.scale, "shape": gev.shape}]
    summary = {"sample_count": n, "mean": float(np.mean(lam_max)), "variance": float(np.var(lam_max))}
    if cfg.square:
        _tw_block(cfg.bipartition[0], lam_max, res, "lambda_max_centered", summary)
    res.summary["max_eig"] = summary


def _tw_block(d, lam_max, res, name, summary):
    c, s = laws.johnstone_center_scale(d)
    y = (lam_max - c) / s
    res.aggregates[name + "_histogram"] = _table(histogram_table(histogram(y)), y.size)
    res.overlays[name + "_histogram"] = [{"law": "tw1"}]
    summary.update({
        "centered_mean": float(np.mean(y)),
        "centered_variance": float(np.var(y)),
        "ks_tracy_widom": ks_distance(y, laws.tracy_widom_f1_cdf),
    })


def _summarize_min(cfg, res, lam_min):
    n = lam_min.size
    d = cfg.bipartition[0]
    orders = list(range(1, _LMIN_ORDERS + 1))
    emp = [float(np.mean(lam_min ** k)) for k in orders]
    res.aggregates["lambda_min_histogram"] = _table(histogram_table(histogram(lam_min)), n)
    summary = {"sample_count": n, "mean": emp[0]}
    if cfg.square:
        ana = [laws.lmin_moment(k, d) for k in orders]
        res.aggregates["lambda_min_moments"] = _table({"k": orders, "empirical": emp, "analytical": ana}, n)
        summary["relative_error_mean"] = emp[0] / ana[0] - 1.0
        res.overlays["lambda_min_histogram"] = [{"law": "lmin", "D": d}]
    else:
        res.aggregates["lambda_min_moments"] = _table({"k": orders, "empirical": emp}, n)
    res.summary["min_eig"] = summary


def _summarize_ratios(res, ratios):
    n = ratios.size
    res.aggregates["spacing_ratio_histogram"] = _table(
        histogram_table(histogram(ratios, range=(0.0, 1.0))), n)
    res.summary["spacing_ratios"] = {"sample_count": n, "mean": float(np.mean(ratios))}


def _new_result(cfg):
    return ExperimentResult(
        config_hash=cfg.config_hash,
        seed=int(cfg.ensemble.seed),
        version=__version__,
        config=cfg.payload(),
        seeds={"master": int(cfg.ensemble.seed), "scheme": SEED_SCHEME,
               "realization_indices": [0, cfg.realizations]},
    )


def run_experiment(cfg, _order=None):
    """Run all realizations of ``cfg`` and merge their aggregates.

    Realization ``i`` draws from its own stream keyed on (seed, i), and the
    merge walks realizations in index order, so neither thread count nor
    scheduling order can change any output.
    """
    if not isinstance(cfg, ExperimentConfig):
        raise ConfigError("run_experiment expects an ExperimentConfig")
    t0 = time.perf_counter()
    pipes = set(cfg.pipelines)
    keep_raw = cfg.realizations * cfg.ensemble.dim * cfg.states_per_realization <= _RAW_COMPONENT_LIMIT
    parts = _execute(cfg, keep_raw, order=_order)
    res = _new_result(cfg)

    if Pipeline.EIGVEC_COMPONENTS in pipes:
        _summarize_components(cfg, res, [p["components"] for p in parts])
    if Pipeline.SPACING_RATIOS in pipes:
        _summarize_ratios(res, np.concatenate([p["ratios"] for p in parts]))
    if pipes & {Pipeline.SCHMIDT_DENSITY, Pipeline.MAX_EIG, Pipeline.MIN_EIG}:
        spectra = np.vstack([np.atleast_2d(p["schmidt"]) for p in parts])
        if Pipeline.SCHMIDT_DENSITY in pipes:
            _summarize_schmidt(cfg, res, spectra)
        if Pipeline.MAX_EIG in pipes:
            _summarize_max(cfg, res, spectra[:, 0].copy())
        if Pipeline.MIN_EIG in pipes:
            _summarize_min(cfg, res, spectra[:, -1].copy())
    if Pipeline.TW_LARGE_D in pipes:
        lam = np.concatenate([p["tw_lambda_max"] for p in parts])
        res.aggregates["tw_lambda_max"] = _table({"value": _floats(lam)}, lam.size)
        summary = {"sample_count": int(lam.size)}
        _tw_block(cfg.bipartition[0], lam, res, "tw_centered", summary)
        res.summary["tw_large_d"] = summary
    res.wall_time = time.perf_counter() - t0
    return res


def table1(D, realizations, seed=0, threads=1, um_realizations=0, qsm_realizations=0,
           um_spec=None, qsm_spec=None, states=300):
    """First five moments of the smallest Schmidt eigenvalue.

    Returns a dict of columns: ``k``, ``analytical`` and, when the matching
    realization count is positive, ``wishart_mc``, ``um_mc`` and ``qsm_mc``.
    Optional Hamiltonian columns need ``D^2`` to equal the ensemble dimension.
    """
    D = int(D)
    if D < 2:
        raise ConfigError("D must be >= 2")
    if realizations < 0 or um_realizations < 0 or qsm_realizations < 0:
        raise ConfigError("realization counts must be non-negative")
    orders = list(range(1, _LMIN_ORDERS + 1))
    out = {"k": orders, "analytical": [laws.lmin_moment(k, D) for k in orders]}
    n_spins = int(round(2 * math.log2(D)))
    if 2 ** n_spins != D * D:
        if realizations or um_realizations or qsm_realizations:
            raise ConfigError("Monte-Carlo columns need D to be a power of two")
        return out

    def column(spec, n):
        cfg = ExperimentConfig(spec, realizations=n, states_per_realization=states,
                               bipartition=(D, D), pipelines=(Pipeline.MIN_EIG,), threads=threads)
        return run_experiment(cfg).aggregates["lambda_min_moments"]["columns"]["empirical"]

    if realizations:
        spec = EnsembleSpec("wishart", N=0, L=n_spins, seed=seed)
        out["wishart_mc"] = column(spec, realizations)
    if um_realizations:
        spec = um_spec or EnsembleSpec("um", N=1, L=n_spins - 1, alpha=0.9, seed=seed)
        out["um_mc"] = column(spec, um_realizations)
    if qsm_realizations:
        spec = qsm_spec or EnsembleSpec("qsm", N=min(5, n_spins - 1), L=n_spins - min(5, n_spins - 1),
                                        alpha=0.9, seed=seed)
        out["qsm_mc"] = column(spec, qsm_realizations)
    return out
