"""
Small dense tanh networks
"""
from typing import Sequence

import torch
from torch import nn

DTYPE = torch.float64


class DenseNet(nn.Module):
    """Fully connected network with tanh between layers and a linear output"""

    def __init__(self, layer_sizes: Sequence[int]):
        super().__init__()
        if len(layer_sizes) < 2:
            raise ValueError(f"need at least input and output sizes, got {list(layer_sizes)}")
        self.layer_sizes = [int(s) for s in layer_sizes]
        modules = []
        for i, (n_in, n_out) in enumerate(zip(self.layer_sizes[:-1], self.layer_sizes[1:])):
            modules.append(nn.Linear(n_in, n_out, dtype=DTYPE))
            if i < len(self.layer_sizes) - 2:
                modules.append(nn.Tanh())
        self.net = nn.Sequential(*modules)

    @property
    def output_layer(self) -> nn.Linear:
        return self.net[-1]

    def zero_output(self, bias: float = 0.0) -> None:
        """Make the network output the constant `bias`"""
        with torch.no_grad():
            self.output_layer.weight.zero_()
            self.output_layer.bias.fill_(bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


def hidden_sizes(hidden_layers: int, hidden_units: int) -> list:
    return [hidden_units] * hidden_layers
