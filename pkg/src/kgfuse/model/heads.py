"""Output heads: masked-token prediction, sentence-order prediction, and
final mention pooling into the KG space."""

from __future__ import annotations

import torch
from torch import nn
from torch.nn.functional import gelu

from .pooling import SpanPooler


class MlmHead(nn.Module):
    """Transform + untied decoder producing vocabulary logits per token."""

    def __init__(self, d1: int, vocab_size: int):
        super().__init__()
        self.transform = nn.Linear(d1, d1)
        self.norm = nn.LayerNorm(d1)
        self.decoder = nn.Linear(d1, vocab_size)

    def forward(self, hidden: torch.Tensor) -> torch.Tensor:
        return self.decoder(self.norm(gelu(self.transform(hidden))))


class SopHead(nn.Module):
    """Two-way classifier over the pooled [CLS] state: in order vs swapped."""

    def __init__(self, d1: int):
        super().__init__()
        self.pool = nn.Linear(d1, d1)
        self.classify = nn.Linear(d1, 2)

    def forward(self, cls_state: torch.Tensor) -> torch.Tensor:
        return self.classify(torch.tanh(self.pool(cls_state)))


class MentionPoolHead(nn.Module):
    """Pool a mention span from final token states into the KG space.

    The same module, run without gradient on frozen input embeddings,
    produces the regression targets for masked mention modeling; keeping
    one set of weights for both is what ties the two sides together.
    """

    def __init__(self, d1: int, d2: int):
        super().__init__()
        self.pooler = SpanPooler(d1)
        self.project = nn.Linear(d1, d2, bias=False)
        self.norm = nn.LayerNorm(d2)

    def forward(self, span_states: torch.Tensor) -> torch.Tensor:
        pooled = self.pooler(span_states)
        return self.norm(gelu(self.project(pooled)))
