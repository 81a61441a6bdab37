"""
Experiment pipeline: run config, stage storage, orchestration and reporting
"""
from .config import RunConfig, load_run_config
from .stages import ExperimentPipeline, train_directory
from .storage import load_dataset, save_dataset

__all__ = [
    "RunConfig",
    "load_run_config",
    "ExperimentPipeline",
    "train_directory",
    "load_dataset",
    "save_dataset",
]
