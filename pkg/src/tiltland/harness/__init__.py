"""Experiments, strategy matrix, metrics, reports and the CLI."""

from .config import ConfigError, LoadedConfig, RunSelection, load_config, parse_config
from .experiment import (DEFAULT_POSITIONS, GP_POSITIONS, PRESETS, ExperimentResult, ExperimentSpec, GpSource,
                         cell_seed, experiment1, experiment2, experiment3, run_experiment)
from .gpbuild import build_experiment3_gp, sample_dataset
from .metrics import CARRIER_MASS, PLATFORM_INERTIA, CellMetrics, MetricsTable, linear_energy, rotational_energy
from .report import load_records, report
from .strategies import (DEFAULT_STRATEGIES, FULL, GP_MEAN_ONLY, GP_WITH_VARIANCE, PLATFORM_TILT_ONLY,
                         PURE_COOPERATION, UAV_TILT_ONLY, Strategy, get_strategy)

__all__ = [
    "ConfigError", "LoadedConfig", "RunSelection", "load_config", "parse_config",
    "DEFAULT_POSITIONS", "GP_POSITIONS", "PRESETS", "ExperimentResult", "ExperimentSpec", "GpSource",
    "cell_seed", "experiment1", "experiment2", "experiment3", "run_experiment",
    "build_experiment3_gp", "sample_dataset",
    "CARRIER_MASS", "PLATFORM_INERTIA", "CellMetrics", "MetricsTable", "linear_energy", "rotational_energy",
    "load_records", "report",
    "DEFAULT_STRATEGIES", "FULL", "GP_MEAN_ONLY", "GP_WITH_VARIANCE", "PLATFORM_TILT_ONLY",
    "PURE_COOPERATION", "UAV_TILT_ONLY", "Strategy", "get_strategy",
]
