"""
Invertible flow layer base class
"""
from abc import ABC, abstractmethod
from typing import Tuple

import torch
from torch import nn


class FlowLayer(nn.Module, ABC):
    """One invertible transform T_k of the composition T = T_K o ... o T_1"""

    @abstractmethod
    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Map data-side points towards the prior

        Args:
            x: points of shape (N, dim)

        Returns:
            (z of shape (N, dim), log|det J| of shape (N,))
        """

    @abstractmethod
    def inverse(self, z: torch.Tensor) -> torch.Tensor:
        """Exact inverse of forward, (N, dim) -> (N, dim)"""
