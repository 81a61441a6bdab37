"""
Learning SDEs with Brownian and alpha-stable Levy noise from short-burst data
"""
from .core.errors import LevyExtractError
from .core.kramers_moyal import (
    estimate_diffusion,
    estimate_drift,
    extract,
    fit_jump_params,
    jump_correction,
    theoretical_annulus_rate,
)
from .core.quadrature import ball_quadrature
from .core.simulator import generate_dataset
from .core.stable import sample_isotropic_stable, sample_standard_symmetric_stable
from .flows import FlowModel, flow_log_density, flow_sample, train_flow
from .models import BurstDataset, ExtractionResult, SdeSpec, StableParams
from .pipeline import ExperimentPipeline, RunConfig, load_run_config

__version__ = "0.1.0"
__all__ = [
    "LevyExtractError",
    "StableParams",
    "SdeSpec",
    "BurstDataset",
    "ExtractionResult",
    "sample_standard_symmetric_stable",
    "sample_isotropic_stable",
    "generate_dataset",
    "FlowModel",
    "train_flow",
    "flow_log_density",
    "flow_sample",
    "ball_quadrature",
    "theoretical_annulus_rate",
    "jump_correction",
    "fit_jump_params",
    "estimate_drift",
    "estimate_diffusion",
    "extract",
    "ExperimentPipeline",
    "RunConfig",
    "load_run_config",
]
