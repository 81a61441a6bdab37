"""
Maximum-likelihood training of one flow per burst
"""
import copy
import logging
import math
from typing import Optional

import numpy as np
import torch

from .model import FlowModel
from .networks import DTYPE
from ..core.errors import ParameterError, TrainingError
from ..models.flow import FlowArchitecture, TrainConfig

logger = logging.getLogger(__name__)


def split_holdout(count: int, fraction: float, rng: np.random.Generator):
    """Shuffled (train, validation) index arrays; validation gets at least one point"""
    order = rng.permutation(count)
    n_val = min(max(1, int(round(fraction * count))), count - 1)
    return order[n_val:], order[:n_val]


def standardization(samples: np.ndarray):
    """Per-coordinate mean and std of the training split"""
    shift = samples.mean(axis=0)
    scale = samples.std(axis=0)
    if np.any(scale <= 0.0) or not np.all(np.isfinite(scale)):
        raise ParameterError(f"samples have zero spread in some coordinate (std={scale.tolist()})")
    return shift, scale


def _mean_nll(model: FlowModel, x: torch.Tensor) -> float:
    with torch.no_grad():
        return float(-model.log_prob(x).mean().item())


def train_flow(
    samples: np.ndarray,
    architecture: FlowArchitecture,
    config: Optional[TrainConfig] = None,
) -> FlowModel:
    """
    Fit a flow to burst endpoints by minimizing the negative log-likelihood

    Args:
        samples: endpoints of shape (N, dim)
        architecture: layer layout; its dim must match the samples
        config: Adam schedule and seed

    Returns:
        model with the lowest validation NLL seen during training, history in model.training_history

    Raises:
        TrainingError: non-finite loss (epoch and batch recorded)
    """
    config = config or TrainConfig()
    data = np.asarray(samples, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2 or data.shape[1] != architecture.dim:
        raise ParameterError(f"samples of shape {data.shape} do not fit arch {architecture.arch}")
    if len(data) < 2:
        raise ParameterError("need at least two samples to train")
    if not np.all(np.isfinite(data)):
        raise ParameterError("samples must be finite")

    rng = np.random.default_rng(config.seed)
    train_idx, val_idx = split_holdout(len(data), config.validation_fraction, rng)
    shift, scale = standardization(data[train_idx])
    # outliers go to the identity tails, not out of the dataset
    limit = architecture.clip_sigmas * scale
    clipped = np.clip(data, shift - limit, shift + limit)
    x_train = torch.as_tensor(clipped[train_idx], dtype=DTYPE)
    x_val = torch.as_tensor(clipped[val_idx], dtype=DTYPE)

    model = FlowModel.build(architecture, seed=config.seed)
    model.set_standardization(shift, scale)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate, betas=config.betas)

    best_val = math.inf
    best_state = copy.deepcopy(model.state_dict())
    history = []
    n_train = len(x_train)
    for epoch in range(config.epochs):
        order = torch.as_tensor(rng.permutation(n_train))
        for batch, start in enumerate(range(0, n_train, config.batch_size)):
            xb = x_train[order[start:start + config.batch_size]]
            optimizer.zero_grad()
            loss = -model.log_prob(xb).mean()
            if not torch.isfinite(loss):
                logger.error(f"学習中に非有限の損失: epoch={epoch}, batch={batch}")
                raise TrainingError("non-finite loss", epoch=epoch, batch=batch)
            loss.backward()
            optimizer.step()

        train_nll, val_nll = _mean_nll(model, x_train), _mean_nll(model, x_val)
        history.append({"epoch": epoch, "train_nll": train_nll, "val_nll": val_nll})
        if math.isfinite(val_nll) and val_nll < best_val:
            best_val = val_nll
            best_state = copy.deepcopy(model.state_dict())
        if epoch % 50 == 0:
            logger.debug(f"epoch {epoch}: train_nll={train_nll:.5f}, val_nll={val_nll:.5f}")

    model.load_state_dict(best_state)
    model.training_history = history
    model.train_config = config
    model.eval()
    logger.info(f"学習完了: arch={architecture.arch}, best val_nll={best_val:.5f}, epochs={config.epochs}")
    return model
