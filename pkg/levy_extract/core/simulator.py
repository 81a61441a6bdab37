"""
Euler-Maruyama short-burst simulation
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigValidationError, IntegrationError, LevyExtractError, ParameterError
from .expressions import CompiledSde, compile_sde
from .stable import levy_increment
from ..models.sde import Burst, BurstDataset, SdeSpec

logger = logging.getLogger(__name__)


def burst_rng(seed: int, index: int) -> np.random.Generator:
    """Independent substream for grid point `index`"""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def euler_maruyama_burst(
    spec: SdeSpec,
    z: Sequence[float],
    n_samples: int,
    rng: np.random.Generator,
    compiled: Optional[CompiledSde] = None,
) -> np.ndarray:
    """
    Simulate n_samples independent paths from x(0)=z and return x(t*)

    Args:
        spec: SDE definition
        z: initial point in R^n
        n_samples: number of independent paths
        rng: random stream owned by this burst
        compiled: pre-compiled fields (compiled from spec when omitted)

    Returns:
        endpoints of shape (n_samples, n)

    Raises:
        IntegrationError: a state became non-finite
    """
    if int(n_samples) != n_samples or n_samples < 1:
        raise ParameterError(f"n_samples must be a positive integer, got {n_samples}")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (spec.dim,):
        raise ParameterError(f"z must have dimension {spec.dim}, got shape {z.shape}")
    compiled = compiled or compile_sde(spec)

    dt = spec.dt
    sqrt_dt = math.sqrt(dt)
    x = np.tile(z, (int(n_samples), 1))
    for step in range(1, spec.n_steps + 1):
        increment = compiled.drift(x) * dt
        if not compiled.diffusion_is_zero:
            xi = rng.standard_normal(size=x.shape)
            increment += np.einsum("sij,sj->si", compiled.diffusion_matrix(x), xi) * sqrt_dt
        if spec.stable is not None:
            increment += levy_increment(spec.stable, dt, x.shape[0], rng)
        x = x + increment
        if not np.all(np.isfinite(x)):
            raise IntegrationError("non-finite state encountered", step)
    return x


def validate_fields_on_grid(compiled: CompiledSde, z_grid: np.ndarray) -> None:
    """Every field entry must evaluate to a finite value at every grid point"""
    with np.errstate(all="ignore"):
        drift = compiled.drift(z_grid)
        lam = compiled.diffusion_matrix(z_grid)
    if not np.all(np.isfinite(drift)):
        bad = z_grid[~np.all(np.isfinite(drift), axis=1)][0]
        raise ConfigValidationError(f"drift is not finite at z={bad.tolist()}", "sde.drift")
    if not np.all(np.isfinite(lam)):
        bad = z_grid[~np.all(np.isfinite(lam.reshape(len(z_grid), -1)), axis=1)][0]
        raise ConfigValidationError(f"diffusion is not finite at z={bad.tolist()}", "sde.diffusion_matrix")


def simulate_burst(spec: SdeSpec, z: Sequence[float], n_samples: int, seed: int, index: int) -> Burst:
    """One grid point's burst, tagged with z on failure"""
    try:
        samples = euler_maruyama_burst(spec, z, n_samples, burst_rng(seed, index))
    except LevyExtractError as e:
        raise e.tag_z(z)
    return Burst(z=np.asarray(z, dtype=float), samples=samples)


def generate_dataset(spec: SdeSpec, z_grid: Sequence[Sequence[float]], n_samples: int, seed: int) -> BurstDataset:
    """
    Simulate one burst per grid point

    Args:
        spec: SDE definition
        z_grid: initial points, shape (G, n)
        n_samples: endpoints per burst
        seed: dataset seed; burst i uses the substream (seed, i)

    Returns:
        BurstDataset
    """
    grid = np.atleast_2d(np.asarray(z_grid, dtype=float))
    if grid.size == 0:
        raise ParameterError("z_grid must not be empty")
    if grid.shape[1] != spec.dim:
        raise ParameterError(f"z_grid points must have dimension {spec.dim}")
    validate_fields_on_grid(compile_sde(spec), grid)

    bursts = []
    for index, z in enumerate(grid):
        bursts.append(simulate_burst(spec, z, n_samples, seed, index))
        logger.debug(f"burst {index} 生成完了: z={z.tolist()}")
    logger.info(f"データセット生成完了: {len(bursts)} bursts x {n_samples} samples")
    return BurstDataset(bursts=bursts, t_star=spec.t_star, seed=int(seed), spec_hash=spec.digest, spec=spec)
