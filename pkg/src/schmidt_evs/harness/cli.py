"""Command-line entry point.

Subcommands ``um``, ``qsm``, ``goe`` and ``wishart`` run experiments,
``laws`` tabulates reference laws, ``fit`` fits GEV/GHD laws to a data file
and ``table1`` prints smallest-eigenvalue moments. Options may also come from
a flat ``key = value`` file given with ``--config``; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .. import __version__, laws
from ..ensembles import EnsembleSpec
from ..exceptions import ConfigError, DomainError
from ..fitting import fit_gev, fit_ghd
from .config import ExperimentConfig, Pipeline, default_realizations, parse_config_file
from .io import write_results
from .plotting import emit_plot, overlay_curves
from .runner import run_experiment, table1

__all__ = ["cli_main", "build_parser"]

_EXPERIMENTS = ("um", "qsm", "goe", "wishart")

# Built-in defaults and value types for every option that may come from a config file.
_DEFAULTS = {
    "alpha": 0.9, "N": 1, "L": 11, "J": 1.0, "gamma": 1.0, "epsilon": 0.2,
    "field_center": 1.0, "field_halfwidth": 0.5, "dim": None,
    "realizations": None, "states": 300, "pipeline": None, "seed": 0, "threads": "1",
    "out": "results", "format": "csv", "plot": False,
    "law": None, "moments": 0, "grid": None, "b": None, "xi": None, "shape": None,
    "kind": None, "input": None, "column": 0,
    "um_realizations": 0, "qsm_realizations": 0,
}
_TYPES = {
    "alpha": float, "N": int, "L": int, "J": float, "gamma": float, "epsilon": float,
    "field_center": float, "field_halfwidth": float, "dim": int, "realizations": int,
    "states": int, "seed": int, "threads": str, "out": str, "format": str,
    "law": str, "moments": int, "grid": str, "b": float, "xi": float, "shape": float,
    "kind": str, "input": str, "column": int, "um_realizations": int, "qsm_realizations": int,
}
_BOOL_TRUE = {"1", "true", "yes", "on"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def _run_options(p):
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", help="worker threads, integer or 'auto'")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"))


def _ensemble_options(p, kind):
    if kind in ("um", "qsm"):
        p.add_argument("--alpha", type=float)
        p.add_argument("--N", type=int)
        p.add_argument("--L", type=int)
        p.add_argument("--J", type=float)
    if kind == "qsm":
        p.add_argument("--gamma", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--field-center", dest="field_center", type=float)
        p.add_argument("--field-halfwidth", dest="field_halfwidth", type=float)
    if kind in ("goe", "wishart"):
        p.add_argument("--dim", type=int,
                       help="matrix order (goe) or subsystem dimension d of a d x d state (wishart)")
    p.add_argument("--realizations", type=int)
    if kind != "wishart":
        p.add_argument("--states", type=int, help="mid-spectrum states per realization")
    p.add_argument("--pipeline", action="append",
                   help="pipeline name; repeat or comma-separate for several")
    p.add_argument("--plot", action="store_const", const=True, help="emit SVG figures")


def build_parser():
    parser = _Parser(prog="schmidt-evs", description="Random-matrix Schmidt spectrum experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)
    kw = dict(argument_default=argparse.SUPPRESS)
    for kind in _EXPERIMENTS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment", **kw)
        _ensemble_options(p, kind)
        _run_options(p)

    p = sub.add_parser("laws", help="tabulate a reference law or its moments", **kw)
    p.add_argument("--config")
    p.add_argument("--law", choices=[law.value for law in laws.LawId])
    p.add_argument("--moments", type=int, help="print the first K moments (mp, lmin)")
    p.add_argument("--grid", help="lo,hi,n; prints a density table")
    p.add_argument("--dim", type=int)
    p.add_argument("--b", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--shape", type=float)

    p = sub.add_parser("fit", help="fit a GEV or GHD law to numbers in a text file", **kw)
    p.add_argument("--config")
    p.add_argument("--kind", choices=("gev", "ghd"))
    p.add_argument("--input", help="text/CSV file; '#' lines are skipped")
    p.add_argument("--column", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("table1", help="moments of the smallest Schmidt eigenvalue", **kw)
    p.add_argument("--dim", type=int)
    p.add_argument("--realizations", type=int)
    p.add_argument("--um-realizations", dest="um_realizations", type=int)
    p.add_argument("--qsm-realizations", dest="qsm_realizations", type=int)
    _run_options(p)
    return parser


def _coerce(key, value):
    if key == "plot":
        return str(value).strip().lower() in _BOOL_TRUE
    if key == "pipeline":
        return [value]
    if key not in _TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        return _TYPES[key](value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def _options(ns):
    """Merge built-in defaults, config file and explicit flags (in that order)."""
    opts = dict(_DEFAULTS)
    explicit = vars(ns)
    if explicit.get("config"):
        if not os.path.isfile(explicit["config"]):
            raise ConfigError(f"config file not found: {explicit['config']}")
        for key, value in parse_config_file(explicit["config"]).items():
            if key == "states_per_realization":
                key = "states"
            opts[key] = _coerce(key, value)
    opts.update({k: v for k, v in explicit.items() if k != "config"})
    return opts


def _pipelines(opts, kind):
    raw = opts["pipeline"]
    if not raw:
        if kind == "wishart":
            return (Pipeline.SCHMIDT_DENSITY, Pipeline.MAX_EIG, Pipeline.MIN_EIG)
        if kind == "goe":
            return (Pipeline.EIGVEC_COMPONENTS, Pipeline.SPACING_RATIOS)
        return (Pipeline.EIGVEC_COMPONENTS, Pipeline.SCHMIDT_DENSITY, Pipeline.MAX_EIG,
                Pipeline.MIN_EIG, Pipeline.SPACING_RATIOS)
    names = [s.strip() for item in raw for s in str(item).split(",") if s.strip()]
    try:
        return tuple(Pipeline(n.lower().replace("_", "-")) for n in names)
    except ValueError as exc:
        raise ConfigError(f"unknown pipeline in {names}; choose from "
                          f"{[p.value for p in Pipeline]}") from exc


def _log2(value, what):
    k = int(round(math.log2(value))) if value and value > 0 else -1
    if k < 0 or 2 ** k != value:
        raise ConfigError(f"{what} must be a power of two")
    return k


def experiment_config(kind, opts):
    pipelines = _pipelines(opts, kind)
    seed = opts["seed"]
    if kind == "wishart":
        d = opts["dim"] or 64
        spec = EnsembleSpec(kind, N=0, L=2 * _log2(d, "--dim"), seed=seed)
        bip = (d, d)
    elif kind == "goe":
        order = opts["dim"] or 4096
        spec = EnsembleSpec(kind, N=0, L=_log2(order, "--dim"), seed=seed)
        bip = None
    else:
        fields = ("alpha", "N", "L", "J")
        if kind == "qsm":
            fields += ("gamma", "epsilon", "field_center", "field_halfwidth")
        spec = EnsembleSpec(kind, seed=seed, **{f: opts[f] for f in fields})
        bip = None
    n = opts["realizations"]
    if n is None:
        n = default_realizations(spec.kind, pipelines)
    return ExperimentConfig(spec, realizations=n, states_per_realization=opts["states"],
                            bipartition=bip, pipelines=pipelines, output_dir=opts["out"],
                            threads=opts["threads"])


_PLOTS = {
    "components_histogram": ("log_y", "sqrt(D) psi_i"),
    "schmidt_histogram": ("linear", "D lambda"),
    "lambda_max_histogram": ("linear", "lambda_max"),
    "lambda_max_centered_histogram": ("linear", "(lambda_max - 4/D) / (2^(4/3) D^(-5/3))"),
    "lambda_min_histogram": ("linear", "lambda_min"),
    "spacing_ratio_histogram": ("linear", "r"),
    "tw_centered_histogram": ("linear", "(lambda_max - 4/D) / (2^(4/3) D^(-5/3))"),
}


def _plots(res, out_dir):
    paths = []
    for name, (style, xlabel) in _PLOTS.items():
        if name not in res.aggregates:
            continue
        dist = res.distribution(name)
        if dist.counts.sum() == 0:
            continue
        curves = overlay_curves(dist, res.overlays.get(name, []))
        path = os.path.join(out_dir, f"{res.config_hash}_{name}.svg")
        paths.append(emit_plot(dist, curves, style=style, path=path, xlabel=xlabel))
        if name == "components_histogram":
            path = os.path.join(out_dir, f"{res.config_hash}_{name}_linear.svg")
            paths.append(emit_plot(dist, curves, style="linear", path=path, xlabel=xlabel))
    return paths


def _cmd_experiment(kind, opts, out):
    cfg = experiment_config(kind, opts)
    res = run_experiment(cfg)
    paths = write_results(res, opts["format"], cfg.output_dir)
    if opts["plot"]:
        paths += _plots(res, cfg.output_dir)
    out.write(json.dumps({"config_hash": res.config_hash, "fits": res.fits, "summary": res.summary},
                         indent=1, sort_keys=True) + "\n")
    for p in paths:
        out.write(f"wrote {p}\n")
    return 0


def _cmd_laws(opts, out):
    law = opts["law"]
    if law is None:
        raise ConfigError("laws: --law is required")
    k = opts["moments"]
    if k:
        if law == "mp":
            vals = [laws.mp_moment(i) for i in range(1, k + 1)]
            out.write(",".join(str(int(round(v))) for v in vals) + "\n")
        elif law == "lmin":
            if not opts["dim"]:
                raise ConfigError("laws --law lmin needs --dim")
            vals = [laws.lmin_moment(i, opts["dim"]) for i in range(1, k + 1)]
            out.write(",".join(f"{v:.6e}" for v in vals) + "\n")
        else:
            raise ConfigError("moments are available for mp and lmin only")
    if opts["grid"]:
        try:
            lo, hi, n = opts["grid"].split(",")
            grid = np.linspace(float(lo), float(hi), int(n))
        except ValueError as exc:
            raise ConfigError("--grid expects lo,hi,n") from exc
        params = {}
        if law == "ghd":
            params = {"b": opts["b"], "xi": opts["xi"]}
        elif law == "gev":
            params = {"shape": opts["shape"]}
        elif law in ("lmin", "eigvec-marginal"):
            params = {"D": opts["dim"]} if law == "lmin" else {"n": opts["dim"]}
        if any(v is None for v in params.values()):
            raise ConfigError(f"law {law} needs parameters {sorted(params)}")
        out.write(laws.law_curve(law, grid, **params).to_csv())
    if not k and not opts["grid"]:
        raise ConfigError("laws: give --moments and/or --grid")
    return 0


def _load_numbers(path, column):
    if not path or not os.path.isfile(path):
        raise ConfigError(f"input file not found: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(v) for v in line.replace(",", " ").split()])
            except ValueError:
                if rows:
                    raise ConfigError(f"non-numeric row in {path}: {line!r}") from None
                # header row
    if not rows:
        raise ConfigError(f"no numeric data in {path}")
    data = np.array(rows, dtype=float)
    if column >= data.shape[1]:
        raise ConfigError(f"input has no column {column}")
    return data[:, column]


def _cmd_fit(opts, out):
    kind = opts["kind"]
    if kind is None:
        raise ConfigError("fit: --kind is required")
    x = _load_numbers(opts["input"], opts["column"])
    fit = fit_gev(x, random_state=opts["seed"]) if kind == "gev" else fit_ghd(x)
    out.write(json.dumps(fit.to_dict(), sort_keys=True) + "\n")
    return 0


def _cmd_table1(opts, out):
    d = opts["dim"] or 64
    n = opts["realizations"]
    n = 600_000 if n is None else n
    t = table1(d, n, seed=opts["seed"], threads=opts["threads"],
               um_realizations=opts["um_realizations"], qsm_realizations=opts["qsm_realizations"])
    cols = [c for c in ("k", "analytical", "wishart_mc", "um_mc", "qsm_mc") if c in t]
    lines = [",".join(cols)]
    for i in range(len(t["k"])):
        lines.append(",".join(str(t[c][i]) if c == "k" else f"{t[c][i]:.6e}" for c in cols))
    text = "\n".join(lines) + "\n"
    out.write(text)
    if opts["out"] and (n or opts["um_realizations"] or opts["qsm_realizations"]):
        os.makedirs(opts["out"], exist_ok=True)
        path = os.path.join(opts["out"], f"table1_D{d}_seed{opts['seed']}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# seed={opts['seed']}\n# version={__version__}\n" + text)
    return 0


def cli_main(argv=None, out=None):
    """Run the CLI; returns 0 on success, 2 on configuration errors, 1 on failures."""
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        opts = _options(ns)
        cmd = ns.command
        if cmd in _EXPERIMENTS:
            return _cmd_experiment(cmd, opts, out)
        if cmd == "laws":
            return _cmd_laws(opts, out)
        if cmd == "fit":
            return _cmd_fit(opts, out)
        return _cmd_table1(opts, out)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (ConfigError, DomainError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except Exception as exc:
        sys.stderr.write(f"failed: {type(exc).__name__}: {exc}\n")
        return 1


def main():
    sys.exit(cli_main())
