"""Experiment configuration and its stable hash."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from enum import Enum

from ..ensembles import EnsembleKind, EnsembleSpec
from ..exceptions import ConfigError

__all__ = ["Pipeline", "ExperimentConfig", "default_realizations", "parse_config_file", "resolve_threads"]


class Pipeline(str, Enum):
    EIGVEC_COMPONENTS = "eigvec-components"
    SCHMIDT_DENSITY = "schmidt-density"
    MAX_EIG = "max-eig"
    MIN_EIG = "min-eig"
    SPACING_RATIOS = "spacing-ratios"
    TW_LARGE_D = "tw-large-d"


_HAMILTONIAN_PIPELINES = {
    Pipeline.EIGVEC_COMPONENTS,
    Pipeline.SCHMIDT_DENSITY,
    Pipeline.MAX_EIG,
    Pipeline.MIN_EIG,
    Pipeline.SPACING_RATIOS,
}
_WISHART_PIPELINES = {Pipeline.SCHMIDT_DENSITY, Pipeline.MAX_EIG, Pipeline.MIN_EIG, Pipeline.TW_LARGE_D}


def default_realizations(kind, pipelines):
    kind = EnsembleKind(kind)
    if kind is EnsembleKind.WISHART:
        if Pipeline.TW_LARGE_D in pipelines:
            return 30_000
        return 600_000 if pipelines == (Pipeline.MIN_EIG,) else 30_000
    return 200


def resolve_threads(threads):
    if threads in (None, "auto"):
        return os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ConfigError("threads must be >= 1 or 'auto'")
    return threads


def _square_cut(n_spins):
    return 2 ** (n_spins // 2), 2 ** (n_spins - n_spins // 2)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: an ensemble, a realization count and the pipelines to run.

    ``bipartition`` defaults to cutting the tensor factors in half, the first
    factor holding the slowest-varying spins. ``threads`` and ``output_dir``
    do not influence results and are left out of :attr:`config_hash`.
    """

    ensemble: EnsembleSpec
    realizations: int = 200
    states_per_realization: int = 300
    bipartition: tuple | None = None
    pipelines: tuple = (Pipeline.SCHMIDT_DENSITY,)
    output_dir: str = "results"
    threads: object = 1
    component_bins: int = 4000
    component_range: float = 12.0
    chunk_size: int | None = None
    fit_seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        pipes = self.pipelines
        if isinstance(pipes, (str, Pipeline)):
            pipes = (pipes,)
        pipes = tuple(dict.fromkeys(Pipeline(p) for p in pipes))
        if not pipes:
            raise ConfigError("at least one pipeline is required")
        object.__setattr__(self, "pipelines", pipes)
        spec = self.ensemble
        if self.bipartition is None:
            object.__setattr__(self, "bipartition", _square_cut(spec.n_spins))
        d1, d2 = (int(x) for x in self.bipartition)
        object.__setattr__(self, "bipartition", (d1, d2))
        if d1 * d2 != spec.dim:
            raise ConfigError(f"bipartition {d1}x{d2} does not match dimension {spec.dim}")
        if self.realizations < 1:
            raise ConfigError("realizations must be positive")
        allowed = _WISHART_PIPELINES if spec.kind is EnsembleKind.WISHART else _HAMILTONIAN_PIPELINES
        bad = [p.value for p in pipes if p not in allowed]
        if bad:
            raise ConfigError(f"pipelines {bad} are not available for ensemble {spec.kind.value}")
        if spec.kind is not EnsembleKind.WISHART:
            if not 1 <= self.states_per_realization <= spec.dim:
                raise ConfigError("states_per_realization must lie in [1, 2^(N+L)]")
            if spec.dim > 2 ** 14:
                raise ConfigError("full diagonalization is limited to N + L <= 14")
        resolve_threads(self.threads)

    @property
    def square(self):
        return self.bipartition[0] == self.bipartition[1]

    def payload(self):
        """Canonical content that determines the results."""
        out = {
            "ensemble": self.ensemble.to_dict(),
            "realizations": self.realizations,
            "bipartition": list(self.bipartition),
            "pipelines": sorted(p.value for p in self.pipelines),
            "component_bins": self.component_bins,
            "component_range": self.component_range,
            "fit_seed": self.fit_seed,
            "extra": dict(self.extra),
        }
        if self.ensemble.kind is not EnsembleKind.WISHART:
            out["states_per_realization"] = self.states_per_realization
        return out

    @property
    def config_hash(self):
        blob = json.dumps(self.payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_(self, **changes):
        return replace(self, **changes)


def parse_config_file(path):
    """Flat ``key = value`` (or ``key value``) text; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, value = (s.strip() for s in line.split("=", 1))
            else:
                parts = line.split(None, 1)
                if len(parts) != 2:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, value = parts
            out[key.lstrip("-").replace("-", "_")] = value
    return out
