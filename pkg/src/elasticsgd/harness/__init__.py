from .configfile import ExperimentConfig, load_experiment
from .reports import compare_report, predict_speedup, run_experiments

__all__ = [
    "ExperimentConfig",
    "compare_report",
    "load_experiment",
    "predict_speedup",
    "run_experiments",
]
