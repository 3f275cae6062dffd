"""Experiment configuration, Monte Carlo tables, figure datasets and the command line."""

from .config import PRESETS, ConfigError, ExperimentConfig, load_config, preset_config, preset_model
from .figures import FIGURES, FigureResult, run_figure
from .montecarlo import (CellResult, MonteCarloTable, emit_table, parse_table_csv, replication_seed,
                         run_montecarlo)

__all__ = [
    "FIGURES",
    "PRESETS",
    "CellResult",
    "ConfigError",
    "ExperimentConfig",
    "FigureResult",
    "MonteCarloTable",
    "emit_table",
    "load_config",
    "parse_table_csv",
    "preset_config",
    "preset_model",
    "replication_seed",
    "run_figure",
    "run_montecarlo",
]
