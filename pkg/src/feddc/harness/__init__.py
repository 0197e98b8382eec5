"""Config-driven experiment harness."""

from ..learners import accuracy
from .config import ExperimentConfig, apply_overrides, from_dict, load_config, to_dict
from .metrics import COLUMNS, read_metrics, render_metrics, summarize, write_metrics
from .runner import prepare_data, run_config, run_sweep, run_to_files

__all__ = [
    "COLUMNS",
    "ExperimentConfig",
    "accuracy",
    "apply_overrides",
    "from_dict",
    "load_config",
    "prepare_data",
    "read_metrics",
    "render_metrics",
    "run_config",
    "run_sweep",
    "run_to_files",
    "summarize",
    "to_dict",
    "write_metrics",
]
