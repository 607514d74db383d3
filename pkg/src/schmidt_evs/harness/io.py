"""CSV and JSON persistence of experiment results."""

from __future__ import annotations

import csv
import json
import os
from enum import Enum

from .runner import ExperimentResult

__all__ = ["OutputFormat", "SCHEMA_VERSION", "write_results", "read_json", "read_csv"]

SCHEMA_VERSION = "v1"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def _metadata_lines(res, sample_count=None):
    lines = [f"# seed={res.seed}", f"# config_hash={res.config_hash}", f"# version={res.version}"]
    if sample_count is not None:
        lines.append(f"# sample_count={sample_count}")
    return lines


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, meta, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in meta:
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    else:
        out.append((prefix, obj))


def write_results(res, fmt="csv", out_dir=None):
    """Write ``res`` under ``out_dir``; returns the written paths.

    CSV gives one file per aggregate table plus ``summary`` (fits and scalar
    statistics as key/value rows). Each CSV starts with ``#`` comment lines
    carrying seed, config hash and code version, then a header row. JSON is a
    single document with ``"schema": "v1"``. Every file name starts with the
    config hash.
    """
    fmt = OutputFormat(fmt)
    out_dir = out_dir if out_dir is not None else res.config.get("output_dir", "results")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if fmt is OutputFormat.JSON:
        path = os.path.join(out_dir, f"{res.config_hash}_result.json")
        doc = {"schema": SCHEMA_VERSION}
        doc.update(_as_record(res))
        with open(path, "w", encoding="utf-8", newline="") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return [path]

    for name in sorted(res.aggregates):
        table = res.aggregates[name]
        cols = table["columns"]
        header = list(cols)
        rows = zip(*(cols[h] for h in header)) if header else []
        path = os.path.join(out_dir, f"{res.config_hash}_{name}.csv")
        _write_csv(path, _metadata_lines(res, table["sample_count"]), header, rows)
        paths.append(path)
    flat = []
    _flatten("fit", res.fits, flat)
    _flatten("summary", res.summary, flat)
    path = os.path.join(out_dir, f"{res.config_hash}_summary.csv")
    _write_csv(path, _metadata_lines(res), ["key", "value"], flat)
    paths.append(path)
    return paths


def _as_record(res):
    return {
        "config_hash": res.config_hash,
        "seed": res.seed,
        "version": res.version,
        "config": res.config,
        "aggregates": res.aggregates,
        "fits": res.fits,
        "summary": res.summary,
        "overlays": res.overlays,
        "seeds": res.seeds,
    }


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    schema = doc.pop("schema", None)
    if schema != SCHEMA_VERSION:
        raise ValueError(f"unsupported result schema {schema!r}")
    return ExperimentResult(**doc)


def read_csv(path):
    """Return (metadata dict, header, rows of strings) of a result CSV."""
    meta, lines = {}, []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    return meta, (rows[0] if rows else []), rows[1:]
