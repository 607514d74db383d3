"""Experiment configuration, execution, persistence, plotting and CLI."""

from .config import ExperimentConfig, Pipeline, parse_config_file
from .io import OutputFormat, read_csv, read_json, write_results
from .plotting import PlotStyle, emit_plot, overlay_curves
from .runner import ExperimentResult, run_experiment, table1
from .cli import cli_main

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "OutputFormat",
    "Pipeline",
    "PlotStyle",
    "cli_main",
    "emit_plot",
    "overlay_curves",
    "parse_config_file",
    "read_csv",
    "read_json",
    "run_experiment",
    "table1",
    "write_results",
]
