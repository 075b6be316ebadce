"""Post-norm transformer encoder over token, position, and segment embeddings.

No dropout anywhere: runs must be bit-reproducible for a fixed seed, and
the toy scale this trains at does not need the regularization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from ..config import ModelConfig


@dataclass
class EncoderState:
    hidden: list[torch.Tensor]  # embedding output then one entry per layer, (B, N, d1)

    @property
    def final(self) -> torch.Tensor:
        return self.hidden[-1]

    def layer(self, idx: int) -> torch.Tensor:
        """0 is the embedding output; k >= 1 is layer k's output."""
        return self.hidden[idx]


class SelfAttention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        if dim % heads != 0:
            raise ValueError(f"dim {dim} not divisible by heads {heads}")
        self.heads = heads
        self.head_dim = dim // heads
        self.query = nn.Linear(dim, dim)
        self.key = nn.Linear(dim, dim)
        self.value = nn.Linear(dim, dim)
        self.output = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor, key_mask: torch.Tensor) -> torch.Tensor:
        b, n, d = x.shape
        shape = (b, n, self.heads, self.head_dim)
        q = self.query(x).view(shape).transpose(1, 2)
        k = self.key(x).view(shape).transpose(1, 2)
        v = self.value(x).view(shape).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        # padding keys are excluded for every query, so pad tokens cannot
        # leak into real positions; pad rows themselves are garbage and the
        # caller must keep masking them downstream
        bias = torch.where(key_mask[:, None, None, :].bool(), 0.0, -torch.inf)
        attn = torch.softmax(scores + bias, dim=-1)
        mixed = (attn @ v).transpose(1, 2).reshape(b, n, d)
        return self.output(mixed)


class EncoderLayer(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.attention = SelfAttention(dim, heads)
        self.attention_norm = nn.LayerNorm(dim)
        self.ffn_in = nn.Linear(dim, 4 * dim)
        self.ffn_out = nn.Linear(4 * dim, dim)
        self.ffn_norm = nn.LayerNorm(dim)

    def forward(self, x: torch.Tensor, key_mask: torch.Tensor) -> torch.Tensor:
        x = self.attention_norm(x + self.attention(x, key_mask))
        return self.ffn_norm(x + self.ffn_out(torch.nn.functional.gelu(self.ffn_in(x))))


class TransformerEncoder(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.token_embedding = nn.Embedding(config.vocab_size, config.d1)
        self.position_embedding = nn.Embedding(config.max_len, config.d1)
        self.segment_embedding = nn.Embedding(2, config.d1)
        self.embedding_norm = nn.LayerNorm(config.d1)
        self.layers = nn.ModuleList(
            EncoderLayer(config.d1, config.heads) for _ in range(config.layers)
        )

    def embed(self, ids: torch.Tensor, segments: torch.Tensor) -> torch.Tensor:
        if ids.shape[1] > self.config.max_len:
            raise ValueError(
                f"sequence length {ids.shape[1]} exceeds max_len {self.config.max_len}"
            )
        if int(ids.max()) >= self.config.vocab_size:
            raise ValueError(
                f"token id {int(ids.max())} outside vocabulary of "
                f"{self.config.vocab_size}"
            )
        positions = torch.arange(ids.shape[1], device=ids.device)
        x = (
            self.token_embedding(ids)
            + self.position_embedding(positions)[None, :, :]
            + self.segment_embedding(segments)
        )
        return self.embedding_norm(x)

    def forward(
        self, ids: torch.Tensor, segments: torch.Tensor, mask: torch.Tensor
    ) -> EncoderState:
        """Full pass without infusion; returns every layer's output."""
        x = self.embed(ids, segments)
        hidden = [x]
        for layer in self.layers:
            x = layer(x, mask)
            hidden.append(x)
        return EncoderState(hidden=hidden)
