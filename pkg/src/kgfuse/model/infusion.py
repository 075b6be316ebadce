"""Mention-neighbor hybrid attention with gated position infusion.

For each linked mention span the layer pools the span into a query,
weighs the mention's ranked KG neighbors first by entity type and then
per node, aggregates their embeddings, and writes the result back into
the span's token states through a per-token gate. Tokens outside mention
spans, and mentions whose entities have no neighbors, pass through
untouched.
"""

from __future__ import annotations

import math
from typing import Sequence

import torch
from torch import nn
from torch.nn.functional import gelu

from ..tokenizer import MentionSpan
from .pooling import SpanPooler


class InfusionLayer(nn.Module):
    def __init__(self, d1: int, d2: int):
        super().__init__()
        self.d1 = d1
        self.d2 = d2
        self.pooler = SpanPooler(d1)
        self.mention_proj = nn.Linear(d1, d2, bias=False)
        self.mention_norm = nn.LayerNorm(d2)

        self.type_query = nn.Linear(d2, d2, bias=False)
        self.type_key = nn.Linear(d2, d2, bias=False)
        self.type_score = nn.Linear(d2, 1, bias=False)

        self.node_query = nn.Linear(d2, d2, bias=False)
        self.node_key = nn.Linear(d2, d2, bias=False)
        self.node_value = nn.Linear(d2, d2)
        self.ffn_in = nn.Linear(d2, 4 * d2)
        self.ffn_out = nn.Linear(4 * d2, d2, bias=False)
        self.node_norm = nn.LayerNorm(d2)

        self.fuse = nn.Linear(2 * d2, 2 * d2)
        self.back_proj = nn.Linear(2 * d2, d1)
        self.back_norm = nn.LayerNorm(d1)
        self.gate = nn.Linear(2 * d1, d1)
        self.expand = nn.Linear(2 * d1, d1)

    def mention_transform(self, span_states: torch.Tensor) -> torch.Tensor:
        """Pool a (span, d1) block and project it into the KG space."""
        pooled = self.pooler(span_states)
        return self.mention_norm(gelu(self.mention_proj(pooled)))

    def type_attention(
        self,
        h_mention: torch.Tensor,
        neighbors: Sequence[tuple[int, int]],
        entity_emb: torch.Tensor,
        entity_types: torch.Tensor,
    ) -> dict[int, torch.Tensor]:
        """Softmax weights over the entity types present among neighbors.

        Each present type is summarized by the unnormalized sum of its
        member embeddings; absent types get no weight at all.
        """
        if not neighbors:
            raise ValueError("type attention needs at least one neighbor")
        by_type: dict[int, list[int]] = {}
        for _, ent in neighbors:
            by_type.setdefault(int(entity_types[ent]), []).append(ent)
        present = sorted(by_type)
        query = self.type_query(h_mention)
        scores = []
        for type_id in present:
            h_type = entity_emb[by_type[type_id]].sum(dim=0)
            scores.append(self.type_score(torch.tanh(query + self.type_key(h_type))))
        weights = torch.softmax(torch.stack(scores).squeeze(-1), dim=0)
        return {type_id: weights[pos] for pos, type_id in enumerate(present)}

    def node_attention_weights(
        self,
        h_mention: torch.Tensor,
        neighbors: Sequence[tuple[int, int]],
        type_weights: dict[int, torch.Tensor],
        entity_emb: torch.Tensor,
        entity_types: torch.Tensor,
    ) -> torch.Tensor:
        """Per-neighbor attention distribution, modulated by type weight."""
        ents = [ent for _, ent in neighbors]
        for ent in ents:
            if int(entity_types[ent]) not in type_weights:
                raise ValueError(
                    f"neighbor entity {ent} has type {int(entity_types[ent])} "
                    "missing from the type weights"
                )
        emb = entity_emb[ents]
        alpha = torch.stack([type_weights[int(entity_types[e])] for e in ents])
        raw = (self.node_query(h_mention) * self.node_key(emb)).sum(dim=-1)
        return torch.softmax(raw / math.sqrt(self.d2) * alpha, dim=0)

    def node_attention_aggregate(
        self,
        h_mention: torch.Tensor,
        neighbors: Sequence[tuple[int, int]],
        type_weights: dict[int, torch.Tensor],
        entity_emb: torch.Tensor,
        entity_types: torch.Tensor,
    ) -> torch.Tensor:
        """Aggregate neighbor embeddings with type-modulated attention."""
        beta = self.node_attention_weights(
            h_mention, neighbors, type_weights, entity_emb, entity_types
        )
        emb = entity_emb[[ent for _, ent in neighbors]]
        aggregated = beta @ self.node_value(emb)
        return self.node_norm(
            aggregated + self.ffn_out(gelu(self.ffn_in(aggregated)))
        )

    def gated_position_infusion(
        self,
        span_states: torch.Tensor,
        h_aggregated: torch.Tensor,
        h_mention: torch.Tensor,
    ) -> torch.Tensor:
        """Write the aggregated knowledge into each span token via a gate."""
        fused = gelu(self.fuse(torch.cat([h_aggregated, h_mention])))
        injected = self.back_norm(self.back_proj(fused))
        expanded = injected.expand(span_states.shape[0], -1)
        gates = torch.tanh(self.gate(torch.cat([span_states, expanded], dim=-1)))
        mixed = torch.cat([span_states, gates * expanded], dim=-1)
        return gelu(self.expand(mixed)) + span_states

    def infuse_span(
        self,
        span_states: torch.Tensor,
        neighbors: Sequence[tuple[int, int]],
        entity_emb: torch.Tensor,
        entity_types: torch.Tensor,
    ) -> torch.Tensor:
        h_mention = self.mention_transform(span_states)
        alpha = self.type_attention(h_mention, neighbors, entity_emb, entity_types)
        h_agg = self.node_attention_aggregate(
            h_mention, neighbors, alpha, entity_emb, entity_types
        )
        return self.gated_position_infusion(span_states, h_agg, h_mention)

    def forward(
        self,
        hidden: torch.Tensor,
        mentions: Sequence[Sequence[MentionSpan]],
        entity_emb: torch.Tensor,
        entity_types: torch.Tensor,
    ) -> torch.Tensor:
        """Apply infusion to every mention span of every batch element.

        ``mentions[b]`` lists the spans of batch element b; spans with an
        empty neighbor tuple are skipped. Rows outside spans are returned
        bit-identical.
        """
        if len(mentions) != hidden.shape[0]:
            raise ValueError(
                f"got mention lists for {len(mentions)} elements, batch is "
                f"{hidden.shape[0]}"
            )
        out = hidden.clone()
        for b, spans in enumerate(mentions):
            for span in spans:
                if not span.neighbors:
                    continue
                block = hidden[b, span.start : span.end + 1]
                out[b, span.start : span.end + 1] = self.infuse_span(
                    block, span.neighbors, entity_emb, entity_types
                )
        return out
