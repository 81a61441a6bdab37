"""
Monotonic rational-quadratic spline transform

Inside [-B, B] each of the K bins maps through a ratio of two quadratics that
matches the knot values and derivatives; outside it is the identity.
"""
import math
from typing import Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F

from .base import FlowLayer
from .networks import DTYPE, DenseNet, hidden_sizes
from ..models.flow import RqSplineParams

MIN_BIN_WIDTH = 1e-3
MIN_BIN_HEIGHT = 1e-3
MIN_DERIVATIVE = 1e-3
# softplus(DERIVATIVE_OFFSET) + MIN_DERIVATIVE == 1
DERIVATIVE_OFFSET = math.log(math.expm1(1.0 - MIN_DERIVATIVE))


def _knot_positions(sizes: torch.Tensor, bound: float) -> torch.Tensor:
    inner = torch.cumsum(sizes, dim=-1)[:-1] - bound
    edge = torch.full((1,), bound, dtype=sizes.dtype)
    return torch.cat([-edge, inner, edge])


def rational_quadratic_spline(
    inputs: torch.Tensor,
    widths: torch.Tensor,
    heights: torch.Tensor,
    derivatives: torch.Tensor,
    bound: float,
    inverse: bool = False,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Apply the spline (or its inverse) elementwise

    Args:
        inputs: any shape
        widths: (K,) positive, summing to 2B
        heights: (K,) positive, summing to 2B
        derivatives: (K+1,) positive, boundary entries 1
        bound: B
        inverse: evaluate the inverse map

    Returns:
        (outputs, log|d outputs / d inputs|), both shaped like inputs
    """
    cumwidths = _knot_positions(widths, bound)
    cumheights = _knot_positions(heights, bound)
    inside = (inputs >= -bound) & (inputs <= bound)
    x = inputs.clamp(-bound, bound)

    knots = cumheights if inverse else cumwidths
    idx = torch.searchsorted(knots[1:-1].detach().contiguous(), x.detach().contiguous(), right=True)

    in_cw, in_w = cumwidths[idx], widths[idx]
    in_ch, in_h = cumheights[idx], heights[idx]
    delta = heights / widths
    in_delta = delta[idx]
    d0, d1 = derivatives[idx], derivatives[idx + 1]
    curvature = d0 + d1 - 2.0 * in_delta

    if inverse:
        dy = x - in_ch
        a = in_h * (in_delta - d0) + dy * curvature
        b = in_h * d0 - dy * curvature
        c = -in_delta * dy
        disc = (b.pow(2) - 4.0 * a * c).clamp(min=0.0)
        theta = (2.0 * c) / (-b - torch.sqrt(disc))
        out = theta * in_w + in_cw
    else:
        theta = (x - in_cw) / in_w
        t1mt = theta * (1.0 - theta)
        out = in_ch + in_h * (in_delta * theta.pow(2) + d0 * t1mt) / (in_delta + curvature * t1mt)

    t1mt = theta * (1.0 - theta)
    denominator = in_delta + curvature * t1mt
    deriv_numerator = in_delta.pow(2) * (d1 * theta.pow(2) + 2.0 * in_delta * t1mt + d0 * (1.0 - theta).pow(2))
    log_det = torch.log(deriv_numerator) - 2.0 * torch.log(denominator)
    if inverse:
        log_det = -log_det

    outputs = torch.where(inside, out, inputs)
    log_det = torch.where(inside, log_det, torch.zeros_like(log_det))
    return outputs, log_det


def knots_from_unconstrained(raw: torch.Tensor, n_bins: int, bound: float) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Softmax widths/heights and softplus interior derivatives from a raw 3K-1 vector"""
    uw, uh, ud = raw[:n_bins], raw[n_bins:2 * n_bins], raw[2 * n_bins:]
    widths = 2.0 * bound * (MIN_BIN_WIDTH + (1.0 - MIN_BIN_WIDTH * n_bins) * F.softmax(uw, dim=-1))
    heights = 2.0 * bound * (MIN_BIN_HEIGHT + (1.0 - MIN_BIN_HEIGHT * n_bins) * F.softmax(uh, dim=-1))
    interior = MIN_DERIVATIVE + F.softplus(ud + DERIVATIVE_OFFSET)
    one = torch.ones(1, dtype=raw.dtype)
    return widths, heights, torch.cat([one, interior, one])


def _params_to_tensors(params: RqSplineParams):
    one = np.ones(1)
    return (
        torch.as_tensor(params.widths, dtype=DTYPE),
        torch.as_tensor(params.heights, dtype=DTYPE),
        torch.as_tensor(np.concatenate([one, params.derivs, one]), dtype=DTYPE),
    )


def rq_spline_forward(x: Union[float, np.ndarray], params: RqSplineParams):
    """
    Forward spline on scalars or arrays

    Returns:
        (z, log_det) with the shape of x (floats for scalar input)
    """
    w, h, d = _params_to_tensors(params)
    arr = torch.as_tensor(np.asarray(x, dtype=float), dtype=DTYPE)
    z, log_det = rational_quadratic_spline(arr.reshape(-1), w, h, d, params.bound)
    z, log_det = z.reshape(arr.shape).numpy(), log_det.reshape(arr.shape).numpy()
    if np.ndim(x) == 0:
        return float(z), float(log_det)
    return z, log_det


def rq_spline_inverse(z: Union[float, np.ndarray], params: RqSplineParams):
    """Inverse spline on scalars or arrays"""
    w, h, d = _params_to_tensors(params)
    arr = torch.as_tensor(np.asarray(z, dtype=float), dtype=DTYPE)
    x, _ = rational_quadratic_spline(arr.reshape(-1), w, h, d, params.bound, inverse=True)
    x = x.reshape(arr.shape).numpy()
    return float(x) if np.ndim(z) == 0 else x


class SplineLayer(FlowLayer):
    """1D spline whose knot parameters come from a constant-input dense network"""

    def __init__(self, n_bins: int = 5, bound: float = 3.0, hidden_layers: int = 3, hidden_units: int = 32):
        super().__init__()
        self.n_bins = n_bins
        self.bound = bound
        self.net = DenseNet([1, *hidden_sizes(hidden_layers, hidden_units), 3 * n_bins - 1])
        self.register_buffer("conditioner_input", torch.ones(1, 1, dtype=DTYPE))
        self.net.zero_output()

    def knots(self) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        raw = self.net(self.conditioner_input)[0]
        return knots_from_unconstrained(raw, self.n_bins, self.bound)

    def spline_params(self) -> RqSplineParams:
        """Current knots as an RqSplineParams record"""
        with torch.no_grad():
            w, h, d = self.knots()
        return RqSplineParams(widths=w.numpy(), heights=h.numpy(), derivs=d[1:-1].numpy(), bound=self.bound)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        w, h, d = self.knots()
        z, log_det = rational_quadratic_spline(x[:, 0], w, h, d, self.bound)
        return z[:, None], log_det

    def inverse(self, z: torch.Tensor) -> torch.Tensor:
        w, h, d = self.knots()
        x, _ = rational_quadratic_spline(z[:, 0], w, h, d, self.bound, inverse=True)
        return x[:, None]
