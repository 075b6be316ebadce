"""Pretraining losses: neighbor prediction over the KG, masked-mention
regression, and the conventional masked-token plus segment-order pair.

Neighbor prediction scores a pooled mention against candidate entities
with a relation-aware compatibility. The per-relation projection and
translation are folded into one precomputed Gram matrix so candidate
entities never need projecting; scores carry a −μ·log Q(e) term that
compensates the frequency-proportional negative sampler.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .batching import IGNORE_LABEL, PretrainBatch
from .config import ModelConfig
from .errors import UnknownIdError
from .model.heads import MentionPoolHead
from .model.knowledge_model import KnowledgeModel
from .sampling import NegativeSampler
from .transr import KgEmbeddings


@dataclass
class KgTensors:
    """Frozen KG embedding tensors plus the per-relation Gram matrices."""

    entity: torch.Tensor    # (Z, d2)
    relation: torch.Tensor  # (R, d2)
    matrix: torch.Tensor    # (R, d2, d2)
    gram: torch.Tensor      # (R, d2+1, d2+1), symmetric PSD

    @property
    def dim(self) -> int:
        return int(self.entity.shape[1])


def kg_tensors(
    emb: KgEmbeddings,
    dtype: torch.dtype = torch.float64,
    requires_grad: bool = False,
) -> KgTensors:
    """Build torch views of the embeddings and precompute the Gram blocks.

    For each relation, stacking the projection on top of the relation
    vector gives B_r ((d2+1)×d2); gram[r] = B_r·B_rᵀ satisfies
    [h 1]·gram[r]·[e 0]ᵀ = (h·M_r + r)·(e·M_r)ᵀ, which is the identity
    that lets scoring skip per-candidate projections. Embeddings default
    to frozen; pass requires_grad=True to fine-tune them jointly.
    """
    entity = torch.tensor(emb.entity, dtype=dtype)
    relation = torch.tensor(emb.relation, dtype=dtype)
    matrix = torch.tensor(emb.matrix, dtype=dtype)
    stacked = torch.cat([matrix, relation[:, None, :]], dim=1)
    gram = stacked @ stacked.transpose(1, 2)
    for tensor in (entity, relation, matrix, gram):
        tensor.requires_grad_(requires_grad)
    return KgTensors(entity=entity, relation=relation, matrix=matrix, gram=gram)


def compatibility_uncorrected(
    h_mf: torch.Tensor, r: int, e: int, kg: KgTensors, mu: float = 10.0
) -> torch.Tensor:
    """μ-scaled cosine between the translated mention and projected entity."""
    m = kg.matrix[r]
    left = h_mf @ m + kg.relation[r]
    right = kg.entity[e] @ m
    left_norm = torch.linalg.vector_norm(left)
    right_norm = torch.linalg.vector_norm(right)
    if float(right_norm) == 0.0:
        raise ValueError(f"entity {e} projects to a zero vector under relation {r}")
    return (left / left_norm) @ (right / right_norm) * mu


def compatibility(
    h_mf: torch.Tensor,
    r: int,
    e: int,
    kg: KgTensors,
    sampler: NegativeSampler,
    mu: float = 10.0,
) -> torch.Tensor:
    """Corrected factored score: normalized Gram product minus μ·log Q(e).

    The entity side is normalized by the raw embedding norm, so this is
    not exactly the cosine of the unfactored form; it is the form the
    sampled softmax consumes for positives and negatives alike.
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    e_norm = torch.linalg.vector_norm(kg.entity[e])
    if float(e_norm) == 0.0:
        raise ValueError(f"entity {e} has a zero-norm embedding")
    one = h_mf.new_ones(1)
    extended = torch.cat([h_mf, one])
    transformed = extended @ kg.gram[r]
    t_norm = torch.linalg.vector_norm(transformed)
    if float(t_norm.detach()) == 0.0:
        raise ValueError(f"relation {r} maps the mention to a zero vector")
    score = (transformed[:-1] / t_norm) @ (kg.entity[e] / e_norm) * mu
    q = sampler.q(e)
    if q <= 0.0:
        raise ValueError(
            f"entity {e} has sampling probability 0; enable smoothing"
        )
    return score - mu * float(np.log(q))


@dataclass
class MnemContext:
    """One linked mention: its pooled representation and recalled neighbors."""

    h_mf: torch.Tensor
    neighbors: tuple[tuple[int, int], ...]  # (relation id, entity id)


def build_mnem_contexts(
    batch: PretrainBatch,
    final_states: torch.Tensor,
    mention_head: MentionPoolHead,
) -> list[MnemContext]:
    """Pool every mention that has neighbors, masked ones included."""
    contexts = []
    for b, spans in enumerate(batch.mentions):
        for span in spans:
            if not span.neighbors:
                continue
            h_mf = mention_head(final_states[b, span.start : span.end + 1])
            contexts.append(MnemContext(h_mf=h_mf, neighbors=span.neighbors))
    return contexts


def draw_mnem_negatives(
    contexts: Sequence[MnemContext],
    sampler: NegativeSampler,
    k_neg: int,
    seed: int,
) -> list[list[list[int]]]:
    """Per context, per neighbor: k_neg same-type draws avoiding the positive.

    A type holding only the positive yields an empty list for that term
    (the term then contributes zero loss, like k_neg = 0).
    """
    rng = np.random.default_rng(seed)
    out: list[list[list[int]]] = []
    for ctx in contexts:
        per_ctx: list[list[int]] = []
        for _, ent in ctx.neighbors:
            type_id = int(sampler.entity_types[ent])
            if not sampler.has_type(type_id):
                raise UnknownIdError(
                    f"negative sampler has no entities of type {type_id}"
                )
            draws = []
            for _ in range(k_neg):
                candidate = sampler.sample_excluding(type_id, ent, rng)
                if candidate is not None:
                    draws.append(candidate)
            per_ctx.append(draws)
        out.append(per_ctx)
    return out


def mnem_loss(
    contexts: Sequence[MnemContext],
    kg: KgTensors,
    sampler: NegativeSampler,
    mu: float,
    negatives: Sequence[Sequence[Sequence[int]]],
) -> torch.Tensor:
    """Sampled-softmax loss, mean over (mention, neighbor) terms.

    Each term is −log of the positive's share of exp-scores among itself
    and its negatives; with no negatives the term is exactly zero.
    """
    terms = []
    for ctx, ctx_negs in zip(contexts, negatives, strict=True):
        for (rel, ent), negs in zip(ctx.neighbors, ctx_negs, strict=True):
            f_pos = compatibility(ctx.h_mf, rel, ent, kg, sampler, mu)
            scores = [f_pos]
            scores += [
                compatibility(ctx.h_mf, rel, neg, kg, sampler, mu) for neg in negs
            ]
            stacked = torch.stack(scores)
            terms.append(torch.logsumexp(stacked, dim=0) - f_pos)
    if not terms:
        return kg.entity.new_zeros(())
    return torch.stack(terms).mean()


@dataclass
class MmemTarget:
    """Frozen input-embedding snapshot that anchors mention regression.

    The table itself never trains; targets are rebuilt every batch by
    running the current pooling head over the frozen rows without
    gradient, so the target tracks the head but cannot pull it.
    """

    table: torch.Tensor  # (vocab, d1), detached

    @classmethod
    def from_model(cls, model: KnowledgeModel) -> "MmemTarget":
        return cls(table=model.input_embedding_table().detach().clone())

    def target_for(
        self, original_ids: Sequence[int], mention_head: MentionPoolHead
    ) -> torch.Tensor:
        rows = self.table[list(original_ids)]
        with torch.no_grad():
            return mention_head(rows)


def mmem_loss(
    predictions: Sequence[torch.Tensor],
    targets: Sequence[torch.Tensor],
    batch_size: int,
) -> torch.Tensor:
    """Σ‖prediction − target‖² over masked mentions, averaged over the batch."""
    if len(predictions) != len(targets):
        raise ValueError(
            f"{len(predictions)} predictions but {len(targets)} targets"
        )
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if not predictions:
        return torch.zeros(())
    total = torch.stack(
        [((p - t) ** 2).sum() for p, t in zip(predictions, targets)]
    ).sum()
    return total / batch_size


def lex_loss(
    mlm_logits: torch.Tensor,
    mlm_labels: torch.Tensor,
    sop_logits: torch.Tensor,
    sop_labels: torch.Tensor,
) -> torch.Tensor:
    """Cross-entropy over masked positions plus order-prediction cross-entropy."""
    flat_labels = mlm_labels.reshape(-1)
    selected = flat_labels != IGNORE_LABEL
    if bool(selected.any()):
        flat_logits = mlm_logits.reshape(-1, mlm_logits.shape[-1])
        mlm = torch.nn.functional.cross_entropy(
            flat_logits[selected], flat_labels[selected]
        )
    else:
        mlm = mlm_logits.new_zeros(())
    sop = torch.nn.functional.cross_entropy(sop_logits, sop_labels)
    return mlm + sop


@dataclass
class LossParts:
    l_ex: torch.Tensor
    l_mnem: torch.Tensor
    l_mmem: torch.Tensor
    total: torch.Tensor

    def floats(self) -> dict[str, float]:
        return {
            "L_EX": float(self.l_ex.detach()),
            "L_MNeM": float(self.l_mnem.detach()),
            "L_MMeM": float(self.l_mmem.detach()),
            "total": float(self.total.detach()),
        }


def combine_losses(
    l_ex: torch.Tensor,
    l_mnem: torch.Tensor,
    l_mmem: torch.Tensor,
    lambda1: float,
    lambda2: float,
) -> torch.Tensor:
    return l_ex + lambda1 * l_mnem + lambda2 * l_mmem


def compute_losses(
    model: KnowledgeModel,
    batch: PretrainBatch,
    kg: KgTensors,
    sampler: NegativeSampler,
    config: ModelConfig,
    seed: int,
    mmem_target: MmemTarget | None = None,
) -> LossParts:
    """Full forward pass producing every component of the total objective.

    ``seed`` controls only the negative draws of this call, so a (batch,
    seed) pair is reproducible regardless of training history.
    """
    state = model(batch.ids, batch.segments, batch.mask, batch.mentions)
    final = state.final

    mlm_logits = model.mlm_head(final)
    sop_logits = model.sop_head(final[:, 0])
    l_ex = lex_loss(mlm_logits, batch.mlm_labels, sop_logits, batch.sop_labels)

    contexts = build_mnem_contexts(batch, final, model.mention_head)
    negatives = draw_mnem_negatives(contexts, sampler, config.k_neg, seed)
    l_mnem = mnem_loss(contexts, kg, sampler, config.mu, negatives)

    if mmem_target is not None:
        predictions = []
        targets = []
        for b, masked in enumerate(batch.masked_mentions):
            for mm in masked:
                span = mm.span
                predictions.append(
                    model.mention_head(final[b, span.start : span.end + 1])
                )
                targets.append(
                    mmem_target.target_for(mm.original_ids, model.mention_head)
                )
        l_mmem = mmem_loss(predictions, targets, batch.size)
        l_mmem = l_mmem.to(final.dtype)
    else:
        l_mmem = final.new_zeros(())

    total = combine_losses(l_ex, l_mnem, l_mmem, config.lambda1, config.lambda2)
    return LossParts(l_ex=l_ex, l_mnem=l_mnem, l_mmem=l_mmem, total=total)
