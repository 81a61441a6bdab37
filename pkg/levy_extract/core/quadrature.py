"""
Tensor-product Simpson quadrature over an epsilon-ball
"""
from functools import lru_cache
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson

from .errors import ParameterError

MIN_RESOLUTION = 33
COVERAGE_SUPERSAMPLING = 8


def simpson_weights(nodes: np.ndarray) -> np.ndarray:
    """Composite Simpson weights on the given nodes (integral of each unit vector)"""
    return simpson(np.eye(len(nodes)), x=nodes, axis=-1)


@lru_cache(maxsize=16)
def _unit_ball_rule(dim: int, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for the unit ball centred at the origin"""
    axis = np.linspace(-1.0, 1.0, resolution)
    w = simpson_weights(axis)
    if dim == 1:
        return axis[:, None], w
    if dim != 2:
        raise ParameterError(f"ball quadrature supports dim 1 or 2, got {dim}")

    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    nodes = np.stack([gx.ravel(), gy.ravel()], axis=1)
    weights = np.outer(w, w).ravel()

    # fraction of each node's cell lying inside the disk
    h = axis[1] - axis[0]
    offsets = (np.arange(COVERAGE_SUPERSAMPLING) + 0.5) / COVERAGE_SUPERSAMPLING - 0.5
    ox, oy = np.meshgrid(offsets * h, offsets * h, indexing="ij")
    sub_x = nodes[:, 0:1] + ox.ravel()[None, :]
    sub_y = nodes[:, 1:2] + oy.ravel()[None, :]
    coverage = np.mean(sub_x ** 2 + sub_y ** 2 < 1.0, axis=1)

    weights = weights * coverage
    weights *= np.pi / weights.sum()
    keep = weights > 0.0
    return nodes[keep], weights[keep]


def ball_rule(z: Sequence[float], eps: float, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quadrature nodes and weights for the ball |x - z| < eps

    Args:
        z: centre, length n (n = 1 or 2)
        eps: radius
        resolution: points per axis (odd, at least 33)

    Returns:
        (nodes of shape (N, n), weights of shape (N,))
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if not eps > 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if resolution < MIN_RESOLUTION:
        raise ParameterError(f"resolution must be at least {MIN_RESOLUTION}, got {resolution}")
    if resolution % 2 == 0:
        raise ParameterError(f"resolution must be odd for Simpson's rule, got {resolution}")
    nodes, weights = _unit_ball_rule(z.shape[0], int(resolution))
    return z + eps * nodes, weights * eps ** z.shape[0]


def ball_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    z: Sequence[float],
    eps: float,
    resolution: int,
) -> float:
    """
    Integrate f over the ball |x - z| < eps

    Args:
        f: vectorized integrand, (N, n) -> (N,)
        z: ball centre
        eps: ball radius
        resolution: Simpson points per axis

    Returns:
        integral value
    """
    nodes, weights = ball_rule(z, eps, resolution)
    return float(np.dot(weights, np.asarray(f(nodes), dtype=float)))
