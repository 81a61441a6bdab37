"""
Normalizing flows: rational-quadratic spline (1D) and affine coupling (2D)
"""
from .base import FlowLayer
from .checkpoint import load_model, save_model
from .coupling import AffineCoupling, coupling_forward, coupling_inverse
from .model import FlowModel, flow_log_density, flow_sample, nll_loss_and_grad
from .spline import SplineLayer, rq_spline_forward, rq_spline_inverse
from .training import train_flow

__all__ = [
    "FlowLayer",
    "FlowModel",
    "SplineLayer",
    "AffineCoupling",
    "rq_spline_forward",
    "rq_spline_inverse",
    "coupling_forward",
    "coupling_inverse",
    "flow_log_density",
    "flow_sample",
    "nll_loss_and_grad",
    "train_flow",
    "save_model",
    "load_model",
]
