"""
Flow checkpoint files
"""
import io
import logging
from pathlib import Path
from typing import Optional, Union

import torch

from .model import FlowModel
from ..core.errors import MissingInputError
from ..core.fileio import atomic_write_bytes, file_sha256
from ..models.flow import FlowArchitecture, TrainConfig

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "levy-extract-flow/1"


def save_model(model: FlowModel, path: Union[str, Path], input_digest: Optional[str] = None) -> str:
    """
    Write a self-describing checkpoint (architecture, parameters, standardization, training config)

    Args:
        model: trained model
        path: destination file (written atomically)
        input_digest: digest of the burst and settings the model was trained on

    Returns:
        SHA-256 of the written file
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "architecture": model.architecture.to_dict(),
        "state_dict": model.state_dict(),
        "train_config": None if model.train_config is None else model.train_config.to_dict(),
        "input_digest": input_digest,
        "history": list(model.training_history),
    }
    buffer = io.BytesIO()
    torch.save(payload, buffer)
    atomic_write_bytes(path, buffer.getvalue())
    digest = file_sha256(path)
    logger.debug(f"チェックポイント保存: {path} ({digest[:12]})")
    return digest


def load_checkpoint(path: Union[str, Path]) -> dict:
    """Raw checkpoint payload; unreadable files raise MissingInputError"""
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise MissingInputError(f"unreadable checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise MissingInputError(f"not a flow checkpoint: {path}")
    return payload


def load_model(path: Union[str, Path]) -> FlowModel:
    """Rebuild the FlowModel stored at path"""
    payload = load_checkpoint(path)
    try:
        model = FlowModel(FlowArchitecture.from_dict(payload["architecture"]))
        model.load_state_dict(payload["state_dict"])
    except (KeyError, RuntimeError, ValueError) as e:
        raise MissingInputError(f"checkpoint {path} does not match its architecture: {e}") from e
    if payload.get("train_config"):
        model.train_config = TrainConfig.from_dict(payload["train_config"])
    model.training_history = list(payload.get("history") or [])
    model.eval()
    return model
