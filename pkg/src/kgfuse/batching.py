"""Pretraining batch construction: segment pairing, token and mention
masking, and neighbor recall for every linked mention.

All randomness flows through one seeded generator, so a (documents, seed)
pair maps to exactly one batch. Token positions inside mention spans are
exempt from ordinary masking; a masked mention has its whole span replaced
by [MASK] and is tracked separately with its original token ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import torch

from .config import ModelConfig
from .kg import FrequencyTable, KnowledgeGraph
from .pagerank import top_k_neighbors
from .tokenizer import (
    MASK_ID,
    SPECIAL_TOKENS,
    MentionSpan,
    Vocab,
    encode_pair,
    link_mentions,
    place_spans,
    tokenize_words,
)

IGNORE_LABEL = -1


@dataclass(frozen=True)
class MaskedMention:
    span: MentionSpan          # position in the padded sequence
    original_ids: tuple[int, ...]  # token ids the [MASK]s replaced


@dataclass
class PretrainBatch:
    ids: torch.Tensor        # (B, N) int64
    segments: torch.Tensor   # (B, N) int64
    mask: torch.Tensor       # (B, N) int64, 1 on real tokens
    mlm_labels: torch.Tensor  # (B, N) int64, IGNORE_LABEL off the masked spots
    sop_labels: torch.Tensor  # (B,) int64, 1 when halves were swapped
    mentions: list[list[MentionSpan]] = field(default_factory=list)
    masked_mentions: list[list[MaskedMention]] = field(default_factory=list)

    @property
    def size(self) -> int:
        return int(self.ids.shape[0])


def neighbor_cache(
    kg: KnowledgeGraph,
    freq: FrequencyTable | None,
    entities: Sequence[int],
    k: int,
    alpha: float = 0.85,
) -> dict[int, tuple[tuple[int, int], ...]]:
    """Precompute ranked (relation, neighbor) pairs per entity.

    The ranking keeps each neighbor once; the connecting relation recorded
    is the smallest relation id between the pair, which is also the rule
    the neighbor-prediction loss uses.
    """
    cache: dict[int, tuple[tuple[int, int], ...]] = {}
    for entity in dict.fromkeys(int(e) for e in entities):
        if not kg.adjacency[entity]:
            cache[entity] = ()
            continue
        result = top_k_neighbors(kg, freq, entity, k, alpha=alpha)
        rel_of = {}
        for rel, nbr, _ in kg.adjacency[entity]:
            if nbr not in rel_of or rel < rel_of[nbr]:
                rel_of[nbr] = rel
        cache[entity] = tuple(
            (int(rel_of[nbr]), int(nbr)) for nbr, _ in result.ranked
        )
    return cache


def _mask_count(n: int, rate: float) -> int:
    """BERT-style budget: round(rate*n), at least 1 when anything is eligible."""
    if n == 0:
        return 0
    return max(1, int(round(rate * n)))


def build_pretrain_batch(
    documents: Sequence[str],
    kg: KnowledgeGraph,
    freq: FrequencyTable | None,
    vocab: Vocab,
    config: ModelConfig,
    seed: int,
    neighbors: Mapping[int, tuple[tuple[int, int], ...]] | None = None,
    hit_ratio: float = 1.0,
    swap_prob: float = 0.5,
    mask_rate: float = 0.15,
) -> PretrainBatch:
    """Turn raw documents into one model-ready batch.

    Each document is split at its token midpoint into an ordered pair,
    swapped with probability ``swap_prob`` (the order-prediction label).
    ``hit_ratio`` is the fraction of linked mentions that keep their
    recalled neighbors; the rest are stripped and skip infusion, which is
    the knob behind the hit-ratio ablation. Documents shorter than 4
    tokens are skipped.
    """
    if not 0.0 <= hit_ratio <= 1.0:
        raise ValueError(f"hit_ratio must be in [0, 1], got {hit_ratio}")
    rng = np.random.default_rng(seed)
    rows = []
    all_mentions: list[list[MentionSpan]] = []
    all_masked: list[list[MaskedMention]] = []

    for text in documents:
        words = tokenize_words(text, vocab)
        if len(words) < 4:
            continue
        mid = len(words) // 2
        first, second = words[:mid], words[mid:]
        swapped = bool(rng.random() < swap_prob)
        if swapped:
            first, second = second, first
        encoding = encode_pair(first, second, vocab, config.max_len)

        spans = place_spans(
            link_mentions(first, kg), link_mentions(second, kg), encoding
        )
        if neighbors is None:
            wanted = {span.entity for span in spans}
            neighbor_map = neighbor_cache(
                kg, freq, sorted(wanted), config.k, alpha=config.alpha
            )
        else:
            neighbor_map = neighbors

        linked: list[MentionSpan] = []
        for span in spans:
            recalled = neighbor_map.get(span.entity, ())
            if recalled and (hit_ratio >= 1.0 or rng.random() < hit_ratio):
                linked.append(span.with_neighbors(recalled))
            else:
                linked.append(span)

        ids = encoding.ids.copy()
        labels = np.full(config.max_len, IGNORE_LABEL, dtype=np.int64)

        # whole-span mention masking first; those positions leave the MLM pool
        masked_mentions: list[MaskedMention] = []
        n_mask_mentions = _mask_count(len(linked), mask_rate)
        chosen = (
            set(rng.choice(len(linked), size=n_mask_mentions, replace=False))
            if linked
            else set()
        )
        mention_positions: set[int] = set()
        for span in linked:
            mention_positions.update(range(span.start, span.end + 1))
        for idx in sorted(chosen):
            span = linked[idx]
            original = tuple(int(t) for t in ids[span.start : span.end + 1])
            ids[span.start : span.end + 1] = MASK_ID
            masked_mentions.append(MaskedMention(span=span, original_ids=original))

        eligible = [
            pos
            for pos in range(encoding.length)
            if int(encoding.ids[pos]) >= len(SPECIAL_TOKENS)
            and pos not in mention_positions
        ]
        n_mlm = _mask_count(len(eligible), mask_rate)
        for pos in sorted(rng.permutation(eligible)[:n_mlm]) if eligible else []:
            labels[pos] = ids[pos]
            roll = rng.random()
            if roll < 0.8:
                ids[pos] = MASK_ID
            elif roll < 0.9:
                ids[pos] = int(rng.integers(len(SPECIAL_TOKENS), len(vocab)))
            # final 10%: keep the original token, label it anyway

        rows.append((ids, encoding.segments, encoding.mask, labels, int(swapped)))
        all_mentions.append(linked)
        all_masked.append(masked_mentions)

    if not rows:
        raise ValueError("every document was shorter than 4 tokens")

    return PretrainBatch(
        ids=torch.from_numpy(np.stack([r[0] for r in rows])),
        segments=torch.from_numpy(np.stack([r[1] for r in rows])),
        mask=torch.from_numpy(np.stack([r[2] for r in rows])),
        mlm_labels=torch.from_numpy(np.stack([r[3] for r in rows])),
        sop_labels=torch.tensor([r[4] for r in rows], dtype=torch.int64),
        mentions=all_mentions,
        masked_mentions=all_masked,
    )
