"""
Nonlocal Kramers-Moyal estimators for isotropic alpha-stable jump noise

Jump parameters come from annulus exceedance rates, drift and diffusion from
first and second moments inside an epsilon-ball of the transition density.
"""
import logging
import math
import warnings
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares
from scipy.special import gamma

from .errors import (
    DomainError,
    EstimationError,
    LevyExtractError,
    LowStatisticsWarning,
    ParameterError,
)
from .quadrature import ball_rule
from ..models.extraction import ExtractionResult, ExtractionSettings, FieldEstimate, JumpEstimate
from ..models.sde import BurstDataset

logger = logging.getLogger(__name__)


class TransitionDensity(Protocol):
    """Anything that evaluates and samples p(x, t* | z, 0)"""

    def log_density(self, points: np.ndarray) -> np.ndarray: ...

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray: ...


def _check_alpha_open(alpha: float) -> None:
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"jump measure is degenerate for alpha={alpha}; need 0 < alpha < 2")


def stable_jump_constant(n: int, alpha: float) -> float:
    """c(n, alpha) of the isotropic alpha-stable jump measure c |y|^(-n-alpha)"""
    _check_alpha_open(alpha)
    return alpha * gamma((n + alpha) / 2.0) / (2.0 ** (1.0 - alpha) * math.pi ** (n / 2.0) * gamma(1.0 - alpha / 2.0))


def unit_sphere_measure(n: int) -> float:
    """Surface measure S_{n-1} of the unit sphere in R^n (2 for n=1, 2*pi for n=2)"""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


def jump_density(y: np.ndarray, alpha: float, sigma: float = 1.0) -> np.ndarray:
    """sigma^-n W(y/sigma) = sigma^alpha c(n, alpha) |y|^(-n-alpha), y of shape (N, n)"""
    y = np.atleast_2d(y)
    n = y.shape[1]
    r = np.linalg.norm(y, axis=1)
    return sigma ** alpha * stable_jump_constant(n, alpha) * r ** (-n - alpha)


def theoretical_annulus_rate(alpha: float, sigma: float, n: int, eps: float, m: float) -> float:
    """
    Jump intensity of the annulus eps <= |y| < m*eps

    Returns:
        sigma^alpha c(n,alpha) S_{n-1} (eps^-alpha - (m eps)^-alpha) / alpha
    """
    _check_alpha_open(alpha)
    if not eps > 0.0 or not m >= 1.0 or not sigma > 0.0:
        raise ParameterError(f"need eps > 0, m >= 1, sigma > 0; got eps={eps}, m={m}, sigma={sigma}")
    radial = (eps ** -alpha - (m * eps) ** -alpha) / alpha
    return sigma ** alpha * stable_jump_constant(n, alpha) * unit_sphere_measure(n) * radial


def jump_correction(alpha_hat: float, sigma_hat: float, n: int, eps: float) -> np.ndarray:
    """
    Second moment of the jump measure inside the eps-ball

    Returns:
        n x n matrix, diagonal sigma^alpha c(n,alpha) S_{n-1} eps^(2-alpha) / (n (2-alpha))
    """
    _check_alpha_open(alpha_hat)
    if not eps > 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    diag = (
        sigma_hat ** alpha_hat * stable_jump_constant(n, alpha_hat) * unit_sphere_measure(n)
        * eps ** (2.0 - alpha_hat) / (n * (2.0 - alpha_hat))
    )
    return diag * np.eye(n)


def _check_annulus(eps: float, m: float, t_star: float) -> None:
    if not eps > 0.0 or not m > 1.0 or not t_star > 0.0:
        raise ParameterError(f"need eps > 0, m > 1, t_star > 0; got eps={eps}, m={m}, t_star={t_star}")


def annulus_count(samples: np.ndarray, z: Sequence[float], eps: float, m: float) -> int:
    """Number of samples with |x - z| in [eps, m*eps)"""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    r = np.linalg.norm(samples - np.atleast_1d(np.asarray(z, dtype=float)), axis=1)
    return int(np.count_nonzero((r >= eps) & (r < m * eps)))


def annulus_mass_rate(samples: np.ndarray, z: Sequence[float], eps: float, m: float, t_star: float) -> float:
    """
    (1/t*) * fraction of samples in the annulus eps <= |x - z| < m*eps

    An empty annulus returns 0 and raises LowStatisticsWarning.
    """
    _check_annulus(eps, m, t_star)
    count = annulus_count(samples, z, eps, m)
    if count == 0:
        warnings.warn(f"empty annulus [{eps}, {m * eps}) around z={list(np.atleast_1d(z))}",
                      LowStatisticsWarning, stacklevel=2)
    return count / (len(samples) * t_star)


def fit_jump_params_from_rates(
    eps_list: Sequence[float],
    rates: Sequence[float],
    n: int,
    m: float,
) -> Tuple[float, float, float]:
    """
    Invert the closed-form annulus rate for (alpha, sigma)

    log rate = log(sigma^alpha c S (1 - m^-alpha) / alpha) - alpha log eps, so the
    log-log slope gives alpha and the intercept gives sigma; a joint least-squares
    refinement on the log residuals follows.

    Returns:
        (alpha_hat, sigma_hat, rms log residual)
    """
    eps = np.asarray(eps_list, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if len(np.unique(eps)) < 2:
        raise EstimationError("need at least two distinct eps values")
    if np.any(rates <= 0.0):
        raise EstimationError("annulus rates must be positive", {"eps": eps.tolist(), "rates": rates.tolist()})
    log_eps, log_rate = np.log(eps), np.log(rates)

    slope, _ = np.polyfit(log_eps, log_rate, 1)
    alpha0 = -slope
    if not 0.0 < alpha0 < 2.0:
        raise EstimationError(f"log-log slope gives alpha={alpha0:.4f} outside (0, 2)",
                              {"eps": eps.tolist(), "rates": rates.tolist()})

    def log_prefactor(alpha: float) -> float:
        return math.log(stable_jump_constant(n, alpha) * unit_sphere_measure(n) * (1.0 - m ** -alpha) / alpha)

    log_sigma0 = np.mean(log_rate + alpha0 * log_eps - log_prefactor(alpha0)) / alpha0

    def residuals(theta: np.ndarray) -> np.ndarray:
        alpha, log_sigma = theta
        return log_prefactor(alpha) + alpha * log_sigma - alpha * log_eps - log_rate

    x0 = [min(max(alpha0, 1e-6), 2.0 - 1e-6), log_sigma0]
    fit = least_squares(residuals, x0=x0, bounds=([1e-6, -np.inf], [2.0 - 1e-6, np.inf]),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    alpha_hat, log_sigma_hat = fit.x
    rms = float(np.sqrt(np.mean(fit.fun ** 2)))
    return float(alpha_hat), float(math.exp(log_sigma_hat)), rms


def fit_jump_params(
    sample_sets: Sequence[np.ndarray],
    z_grid: Sequence[Sequence[float]],
    eps_list: Sequence[float],
    m: float,
    t_star: float,
    source: str = "flow",
) -> JumpEstimate:
    """
    Estimate (alpha, sigma) from annulus rates pooled over all bursts

    Args:
        sample_sets: one array of endpoints per grid point (raw or flow-resampled)
        z_grid: initial points matching sample_sets
        eps_list: annulus inner radii (at least two distinct)
        m: annulus ratio > 1
        t_star: burst horizon
        source: label recorded in the estimate ("flow" or "raw")

    Raises:
        EstimationError: zero or non-decreasing pooled rates across eps
    """
    eps = sorted(float(e) for e in eps_list)
    if len(set(eps)) < 2:
        raise ParameterError("fit_jump_params needs at least two distinct eps values")
    grid = np.atleast_2d(np.asarray(z_grid, dtype=float))
    if len(sample_sets) != len(grid):
        raise ParameterError(f"{len(sample_sets)} sample sets for {len(grid)} grid points")

    table: List[Dict[str, float]] = []
    counts = np.zeros(len(eps), dtype=int)
    total = 0
    for index, (samples, z) in enumerate(zip(sample_sets, grid)):
        total += len(samples)
        for k, e in enumerate(eps):
            count = annulus_count(samples, z, e, m)
            counts[k] += count
            table.append({"z_index": index, "eps": e, "count": count,
                          "rate": count / (len(samples) * t_star)})
    pooled = counts / (total * t_star)
    diagnostics = {"eps": eps, "counts": counts.tolist(), "pooled_rates": pooled.tolist()}

    if np.any(counts == 0):
        raise EstimationError("empty annulus in pooled counts", diagnostics)
    if np.any(np.diff(pooled) >= 0.0):
        raise EstimationError("pooled annulus rates are not decreasing in eps", diagnostics)

    alpha_hat, sigma_hat, rms = fit_jump_params_from_rates(eps, pooled, grid.shape[1], m)
    estimate = JumpEstimate(alpha_hat=alpha_hat, sigma_hat=sigma_hat, epsilons=eps, m=float(m),
                            dim=grid.shape[1], pooled_rates=pooled.tolist(), residual=rms,
                            source=source, per_z_counts=table)
    logger.info(f"ジャンプパラメータ推定: {estimate}")
    return estimate


def _density_moments(model: TransitionDensity, z: np.ndarray, eps: float, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """Ball integrals of (x-z) p and (x-z)(x-z)^T p"""
    nodes, weights = ball_rule(z, eps, resolution)
    density = np.exp(np.asarray(model.log_density(nodes), dtype=float))
    wd = weights * density
    d = nodes - z
    first = wd @ d
    second = np.einsum("k,ki,kj->ij", wd, d, d)
    return first, second


def conditional_moments_from_samples(
    samples: np.ndarray, z: Sequence[float], eps: float, t_star: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sample-path form: (1/t*) E[(x-z) 1{|x-z|<eps}] and (1/t*) E[(x-z)(x-z)^T 1{|x-z|<eps}]

    Returns:
        (first moment of shape (n,), second moment of shape (n, n))
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    z = np.atleast_1d(np.asarray(z, dtype=float))
    d = samples - z
    inside = np.linalg.norm(d, axis=1) < eps
    if not np.any(inside):
        warnings.warn(f"no samples inside the {eps}-ball around z={z.tolist()}", LowStatisticsWarning, stacklevel=2)
    d_in = d[inside]
    first = d_in.sum(axis=0) / (len(samples) * t_star)
    second = d_in.T @ d_in / (len(samples) * t_star)
    return first, second


def estimate_drift(model: TransitionDensity, z: Sequence[float], eps: float, t_star: float, resolution: int = 201) -> np.ndarray:
    """b_i(z) ~ (1/t*) * integral over |x-z|<eps of (x_i - z_i) p(x) dx"""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    first, _ = _density_moments(model, z, eps, resolution)
    return first / t_star


def correct_second_moment(
    second: np.ndarray, n: int, eps: float, jump: Optional[JumpEstimate]
) -> Tuple[np.ndarray, bool]:
    """Subtract the jump correction, symmetrize, clamp negative diagonals"""
    a = np.array(second, dtype=float)
    if jump is not None:
        a = a - jump_correction(jump.alpha_hat, jump.sigma_hat, n, eps)
    a = 0.5 * (a + a.T)
    diag = np.diag(a).copy()
    clamped = bool(np.any(diag < 0.0))
    if clamped:
        np.fill_diagonal(a, np.maximum(diag, 0.0))
    return a, clamped


def estimate_diffusion(
    model: TransitionDensity,
    z: Sequence[float],
    eps: float,
    t_star: float,
    jump: Optional[JumpEstimate],
    resolution: int = 201,
) -> Tuple[np.ndarray, bool]:
    """
    a_ij(z) ~ (1/t*) * ball integral of (x_i-z_i)(x_j-z_j) p(x) dx minus the jump correction

    Returns:
        (symmetric n x n matrix, True when a negative diagonal was clamped to 0)
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    _, second = _density_moments(model, z, eps, resolution)
    matrix, clamped = correct_second_moment(second / t_star, z.shape[0], eps, jump)
    if clamped:
        logger.warning(f"負の拡散対角成分を0にクランプ: z={z.tolist()}")
    return matrix, clamped


def resample_sets(models: Sequence[Optional[TransitionDensity]], count: int, seed: int) -> List[Optional[np.ndarray]]:
    """Flow resamples per burst; substream (seed, index) per model"""
    out = []
    for index, model in enumerate(models):
        if model is None:
            out.append(None)
            continue
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index), 1)))
        out.append(np.asarray(model.sample(count, rng), dtype=float))
    return out


def fit_jumps_for_source(
    dataset: BurstDataset,
    models: Sequence[Optional[TransitionDensity]],
    settings: ExtractionSettings,
    source: str,
    seed: int,
) -> JumpEstimate:
    """JumpEstimate from raw bursts or flow resamples (bursts without a model are skipped)"""
    if source == "raw":
        sets = [b.samples for b in dataset.bursts]
        grid = dataset.z_grid
    else:
        count = settings.resample_count or dataset.n_samples
        resampled = resample_sets(models, count, seed)
        keep = [i for i, s in enumerate(resampled) if s is not None]
        if not keep:
            raise EstimationError("no trained models available for flow resampling")
        sets = [resampled[i] for i in keep]
        grid = dataset.z_grid[keep]
    return fit_jump_params(sets, grid, settings.jump_eps, settings.m, dataset.t_star, source=source)


def extract_point(
    model: Optional[TransitionDensity],
    samples: np.ndarray,
    z: np.ndarray,
    t_star: float,
    settings: ExtractionSettings,
    jump: Optional[JumpEstimate],
) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Drift and diffusion at one grid point; errors are tagged with z"""
    n = z.shape[0]
    try:
        if settings.field_source == "samples":
            first, second = conditional_moments_from_samples(samples, z, settings.ball_eps, t_star)
            drift = first
            diffusion, clamped = correct_second_moment(second, n, settings.ball_eps, jump)
        else:
            if model is None:
                raise EstimationError("no trained model for this burst")
            resolution = settings.resolution_for(n)
            drift = estimate_drift(model, z, settings.ball_eps, t_star, resolution)
            diffusion, clamped = estimate_diffusion(model, z, settings.ball_eps, t_star, jump, resolution)
        if not (np.all(np.isfinite(drift)) and np.all(np.isfinite(diffusion))):
            raise EstimationError("non-finite field estimate")
    except LevyExtractError as e:
        raise e.tag_z(z)
    return drift, diffusion, clamped


def fit_jump_estimates(
    dataset: BurstDataset,
    models: Sequence[Optional[TransitionDensity]],
    settings: ExtractionSettings,
    seed: int = 0,
) -> Tuple[Optional[JumpEstimate], Dict[str, object]]:
    """
    Primary JumpEstimate from settings.jump_source, the other source kept as a diagnostic

    Returns:
        (estimate or None when jump fitting is disabled, diagnostics)
    """
    diagnostics: Dict[str, object] = {}
    if not settings.fit_jumps:
        return None, diagnostics
    jump = fit_jumps_for_source(dataset, models, settings, settings.jump_source, seed)
    other = "raw" if settings.jump_source == "flow" else "flow"
    try:
        alt = fit_jumps_for_source(dataset, models, settings, other, seed)
        diagnostics[f"jump_{other}"] = {"alpha_hat": alt.alpha_hat, "sigma_hat": alt.sigma_hat,
                                        "pooled_rates": alt.pooled_rates, "residual": alt.residual}
    except LevyExtractError as e:
        diagnostics[f"jump_{other}"] = {"error": str(e)}
    return jump, diagnostics


PointOutcome = Tuple[Optional[np.ndarray], Optional[np.ndarray], bool, Optional[str]]


def extract_point_outcome(
    model: Optional[TransitionDensity],
    samples: np.ndarray,
    z: np.ndarray,
    t_star: float,
    settings: ExtractionSettings,
    jump: Optional[JumpEstimate],
) -> PointOutcome:
    """extract_point with failures returned as a message instead of raised"""
    try:
        drift, diffusion, clamped = extract_point(model, samples, z, t_star, settings, jump)
    except LevyExtractError as e:
        logger.error(f"グリッド点の推定に失敗: {e}")
        return None, None, False, str(e)
    return drift, diffusion, clamped, None


def assemble_result(
    dataset: BurstDataset,
    settings: ExtractionSettings,
    jump: Optional[JumpEstimate],
    outcomes: Sequence[PointOutcome],
    seed: int = 0,
    diagnostics: Optional[Dict[str, object]] = None,
) -> ExtractionResult:
    """Collect per-point outcomes into an ExtractionResult (failed points stay NaN)"""
    g, n = len(dataset.bursts), dataset.dim
    drift = np.full((g, n), np.nan)
    diffusion = np.full((g, n, n), np.nan)
    clamped: List[int] = []
    failed: Dict[int, str] = {}
    for index, (b, a, was_clamped, error) in enumerate(outcomes):
        if error is not None:
            failed[index] = error
            continue
        drift[index], diffusion[index] = b, a
        if was_clamped:
            clamped.append(index)

    fields = FieldEstimate(grid=dataset.z_grid, drift=drift, diffusion=diffusion, epsilon=settings.ball_eps,
                           quad_points=settings.resolution_for(n), source=settings.field_source,
                           clamped=clamped, failed=failed)
    provenance = {"spec_hash": dataset.spec_hash, "dataset_seed": dataset.seed, "resample_seed": int(seed)}
    result = ExtractionResult(jump=jump, fields=fields, settings=settings, t_star=dataset.t_star,
                              provenance=provenance, diagnostics=dict(diagnostics or {}))
    logger.info(f"抽出完了: {result.summary()}")
    return result


def extract(
    dataset: BurstDataset,
    models: Sequence[Optional[TransitionDensity]],
    settings: ExtractionSettings,
    seed: int = 0,
    strict: bool = True,
) -> ExtractionResult:
    """
    Jump fit once over all bursts, then drift and diffusion per grid point

    Args:
        dataset: bursts with their initial points
        models: one trained density per burst (None where training failed)
        settings: estimator settings
        seed: seed for flow resampling
        strict: raise on the first failing grid point; otherwise record it and continue

    Returns:
        ExtractionResult
    """
    if len(models) != len(dataset.bursts):
        raise ParameterError(f"{len(models)} models for {len(dataset.bursts)} bursts")
    jump, diagnostics = fit_jump_estimates(dataset, models, settings, seed)

    outcomes: List[PointOutcome] = []
    for burst, model in zip(dataset.bursts, models):
        if strict:
            b, a, was_clamped = extract_point(model, burst.samples, burst.z, dataset.t_star, settings, jump)
            outcomes.append((b, a, was_clamped, None))
        else:
            outcomes.append(extract_point_outcome(model, burst.samples, burst.z, dataset.t_star, settings, jump))
    return assemble_result(dataset, settings, jump, outcomes, seed, diagnostics)
