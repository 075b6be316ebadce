"""Self-attentive pooling of a token span into one vector."""

from __future__ import annotations

import torch
from torch import nn


class SpanPooler(nn.Module):
    """Single-head attentive pooling: score each token with a tanh
    bottleneck and an internal scoring vector, softmax over the span, and
    return the weighted sum. A single-token span passes through exactly."""

    def __init__(self, dim: int):
        super().__init__()
        self.score_proj = nn.Linear(dim, dim)
        self.score_vec = nn.Linear(dim, 1, bias=False)

    def weights(self, states: torch.Tensor) -> torch.Tensor:
        if states.ndim != 2 or states.shape[0] == 0:
            raise ValueError(f"expected a non-empty (span, dim) matrix, got {tuple(states.shape)}")
        scores = self.score_vec(torch.tanh(self.score_proj(states))).squeeze(-1)
        return torch.softmax(scores, dim=0)

    def forward(self, states: torch.Tensor) -> torch.Tensor:
        return self.weights(states) @ states
