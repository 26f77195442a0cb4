"""Monte Carlo experiments, statistics, configuration and the CLI."""

from .config import ExperimentConfig, dump_config, load_config, save_config
from .stats import clopper_pearson
from .sweep import SweepResult, SweepRow, run_sweep, write_results

__all__ = [
    "ExperimentConfig",
    "SweepResult",
    "SweepRow",
    "clopper_pearson",
    "dump_config",
    "load_config",
    "run_sweep",
    "save_config",
    "write_results",
]
