"""
Symmetric and isotropic alpha-stable samplers

All laws use the standard parametrization with characteristic function
exp(-|u|^alpha); the noise intensity sigma is applied by the caller.
"""
import logging
import math

import numpy as np

from .errors import ParameterError
from ..models.sde import StableParams

logger = logging.getLogger(__name__)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 2.0:
        raise ParameterError(f"alpha must lie in (0, 2], got {alpha}")


def _check_count(count: int) -> None:
    if int(count) != count or count < 1:
        raise ParameterError(f"count must be a positive integer, got {count}")


def sample_standard_symmetric_stable(alpha: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Chambers-Mallows-Stuck draws from S_alpha(1, 0, 0)

    Args:
        alpha: stability index in (0, 2]
        count: number of draws
        rng: numpy random generator

    Returns:
        array of shape (count,)
    """
    _check_alpha(alpha)
    _check_count(count)
    v = rng.uniform(-math.pi / 2, math.pi / 2, size=int(count))
    w = rng.exponential(1.0, size=int(count))
    if alpha == 1.0:
        return np.tan(v)
    return (
        np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)
    )


def sample_positive_stable(beta: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Kanter draws of a positive beta-stable variable with Laplace transform exp(-s^beta)

    Args:
        beta: index in (0, 1]; beta == 1 is the constant 1
        count: number of draws
        rng: numpy random generator
    """
    if not 0.0 < beta <= 1.0:
        raise ParameterError(f"beta must lie in (0, 1], got {beta}")
    _check_count(count)
    if beta == 1.0:
        return np.ones(int(count))
    u = rng.uniform(0.0, math.pi, size=int(count))
    w = rng.exponential(1.0, size=int(count))
    return (
        np.sin(beta * u) / np.sin(u) ** (1.0 / beta)
        * (np.sin((1.0 - beta) * u) / w) ** ((1.0 - beta) / beta)
    )


def sample_isotropic_stable(params: StableParams, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Isotropic alpha-stable draws in R^n by Gaussian subordination

    X = sqrt(2A) G with G standard normal in R^n and A positive (alpha/2)-stable,
    so that E exp(i u.X) = exp(-|u|^alpha).

    Returns:
        array of shape (count, params.dim)
    """
    _check_alpha(params.alpha)
    _check_count(count)
    a = sample_positive_stable(params.alpha / 2.0, count, rng)
    g = rng.standard_normal(size=(int(count), params.dim))
    return np.sqrt(2.0 * a)[:, None] * g


def levy_increment(params: StableParams, dt: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Per-step Levy increment sigma * dt^(1/alpha) * eta, shape (count, dim)"""
    if not dt > 0.0:
        raise ParameterError(f"dt must be positive, got {dt}")
    scale = params.sigma * dt ** (1.0 / params.alpha)
    return scale * sample_isotropic_stable(params, count, rng)


def hill_tail_index(values: np.ndarray, tail_fraction: float = 0.01) -> float:
    """
    Hill estimate of the power-law tail index of |values|

    Args:
        values: samples (any shape; magnitudes are used)
        tail_fraction: fraction of largest order statistics used

    Returns:
        estimated tail index
    """
    mags = np.sort(np.abs(np.ravel(values)))[::-1]
    k = int(len(mags) * tail_fraction)
    if k < 2:
        raise ParameterError(f"tail_fraction {tail_fraction} leaves fewer than 2 order statistics")
    logs = np.log(mags[: k + 1])
    return float(1.0 / np.mean(logs[:k] - logs[k]))
