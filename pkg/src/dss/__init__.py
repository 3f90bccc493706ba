"""Sequence selection for enumerative sphere shaping over nonlinear fiber."""
from .config import ExperimentConfig, load_config, load_preset
from .experiment import ResultRow, emit_csv, read_csv, run_experiment

__all__ = ["ExperimentConfig", "ResultRow", "emit_csv", "load_config", "load_preset", "read_csv", "run_experiment"]
__version__ = "0.1.0"
