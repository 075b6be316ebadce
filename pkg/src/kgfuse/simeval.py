"""Intrinsic similarity evaluation: dataset construction and Acc@1 scoring.

Equivalence edges in the graph define synonym pairs. Each pair yields two
samples (either side as query) whose negatives are same-typed entities
with a confusably similar surface. Two filtered variants are carved out
of the base set: structurally close pairs (shared neighborhoods) and
pairs involving rarely mentioned entities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import torch

from .errors import FormatError, UnknownIdError
from .kernels import jaro_winkler
from .kg import FrequencyTable, KnowledgeGraph
from .model.knowledge_model import KnowledgeModel
from .tokenizer import MentionSpan, Vocab, link_mentions, tokenize_words
from .tokenizer import CLS_ID, PAD_ID, SEP_ID


@dataclass(frozen=True)
class SimilaritySample:
    query: int
    positive: int
    negatives: tuple[int, ...]
    flagged: bool = False  # fewer eligible negatives than requested

    @property
    def candidates(self) -> tuple[int, ...]:
        return (self.positive,) + self.negatives


@dataclass
class SimilarityDataset:
    variant: str  # "D1", "D2", or "D3"
    samples: list[SimilaritySample]

    def __len__(self) -> int:
        return len(self.samples)

    def pair_set(self) -> set[tuple[int, int]]:
        return {(s.query, s.positive) for s in self.samples}


def jaccard(set_a: set, set_b: set) -> float:
    """|A∩B| / |A∪B|, with two empty sets defined as 0."""
    union = set_a | set_b
    if not union:
        return 0.0
    return len(set_a & set_b) / len(union)


def equivalence_pairs(
    kg: KnowledgeGraph, equivalence: int | str
) -> list[tuple[int, int]]:
    """Symmetrized, deduplicated synonym pairs, self-loops dropped."""
    rel = kg.relation_id(equivalence) if isinstance(equivalence, str) else equivalence
    if not 0 <= rel < kg.num_relations:
        raise UnknownIdError(f"relation id {rel} out of range")
    pairs = {
        (min(int(h), int(t)), max(int(h), int(t)))
        for h, r, t in kg.triples
        if int(r) == rel and int(h) != int(t)
    }
    return sorted(pairs)


def build_similarity_datasets(
    kg: KnowledgeGraph,
    freq: FrequencyTable | None,
    equivalence: int | str,
    jw_threshold: float = 0.6,
    jaccard_threshold: float = 0.75,
    min_common: int = 3,
    low_freq_cap: int = 200,
    num_negatives: int = 19,
    seed: int = 0,
) -> tuple[SimilarityDataset, SimilarityDataset, SimilarityDataset]:
    """Build the base dataset and its two filtered variants.

    Negatives share the positive's type, differ from both sides of the
    pair, and have surface similarity to the positive above the
    threshold. A type pool smaller than requested yields all of it and
    flags the sample. The structural variant keeps pairs whose raw 1-hop
    neighbor sets (which include each other, via the equivalence edge
    itself) overlap strongly; the rare variant keeps pairs where either
    side's corpus count is at or under the cap.
    """
    rng = np.random.default_rng(seed)
    counts = freq.counts if freq is not None else np.zeros(kg.num_entities, int)

    base: list[SimilaritySample] = []
    d2: list[SimilaritySample] = []
    d3: list[SimilaritySample] = []
    for a, b in equivalence_pairs(kg, equivalence):
        neigh_a = set(kg.neighbor_ids(a))
        neigh_b = set(kg.neighbor_ids(b))
        structural = (
            jaccard(neigh_a, neigh_b) >= jaccard_threshold
            and len(neigh_a & neigh_b) >= min_common
        )
        rare = counts[a] <= low_freq_cap or counts[b] <= low_freq_cap
        for query, positive in ((a, b), (b, a)):
            sample = _build_sample(
                kg, query, positive, jw_threshold, num_negatives, rng
            )
            base.append(sample)
            if structural:
                d2.append(sample)
            if rare:
                d3.append(sample)

    return (
        SimilarityDataset("D1", base),
        SimilarityDataset("D2", d2),
        SimilarityDataset("D3", d3),
    )


def _build_sample(
    kg: KnowledgeGraph,
    query: int,
    positive: int,
    jw_threshold: float,
    num_negatives: int,
    rng: np.random.Generator,
) -> SimilaritySample:
    type_id = int(kg.entity_types[positive])
    surface = kg.entities[positive]
    eligible = [
        e
        for e in kg.type_index[type_id]
        if e != positive
        and e != query
        and jaro_winkler(kg.entities[e], surface) > jw_threshold
    ]
    if len(eligible) <= num_negatives:
        chosen = list(eligible)
        flagged = len(eligible) < num_negatives
    else:
        chosen = sorted(
            int(e)
            for e in rng.choice(np.array(eligible), size=num_negatives, replace=False)
        )
        flagged = False
    return SimilaritySample(
        query=query,
        positive=positive,
        negatives=tuple(int(e) for e in chosen),
        flagged=flagged,
    )


Provider = Callable[[int], np.ndarray]


def _as_provider(provider: Provider | Mapping[int, np.ndarray]) -> Provider:
    if callable(provider):
        return provider
    return provider.__getitem__


def acc_at_1(
    dataset: SimilarityDataset,
    provider: Provider | Mapping[int, np.ndarray],
) -> float:
    """Fraction of samples whose positive is the strict cosine winner.

    Any tie with a negative counts as a miss. Empty datasets score 0.
    """
    lookup = _as_provider(provider)
    if not dataset.samples:
        return 0.0
    hits = 0
    for sample in dataset.samples:
        query_vec = _unit(lookup(sample.query), sample.query)
        positive_sim = _unit(lookup(sample.positive), sample.positive) @ query_vec
        best_negative = -np.inf
        for neg in sample.negatives:
            best_negative = max(best_negative, _unit(lookup(neg), neg) @ query_vec)
        if positive_sim > best_negative:
            hits += 1
    return hits / len(dataset.samples)


def _unit(vec: np.ndarray, entity: int) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ValueError(f"entity {entity} has a zero-norm vector")
    return vec / norm


def embed_entities_via_model(
    model: KnowledgeModel,
    kg: KnowledgeGraph,
    vocab: Vocab,
    entities: Sequence[int],
    neighbors: Mapping[int, tuple[tuple[int, int], ...]] | None = None,
) -> dict[int, np.ndarray]:
    """Encode each entity's bare surface; mean over non-special tokens.

    The surface is linked against the graph, so the entity's own mention
    receives knowledge infusion when it has recalled neighbors, exactly
    as it would inside a corpus sentence.
    """
    vectors: dict[int, np.ndarray] = {}
    model.eval()
    for entity in entities:
        kg.check_entity(int(entity))
        surface = kg.entities[int(entity)]
        words = tokenize_words(surface, vocab)
        if not words:
            raise ValueError(f"surface {surface!r} tokenizes to nothing")
        length = min(len(words) + 2, model.config.max_len)
        words = words[: length - 2]

        ids = np.full(model.config.max_len, PAD_ID, dtype=np.int64)
        ids[0] = CLS_ID
        for pos, word in enumerate(words, start=1):
            ids[pos] = vocab.id(word)
        ids[len(words) + 1] = SEP_ID
        mask = np.zeros(model.config.max_len, dtype=np.int64)
        mask[: len(words) + 2] = 1

        spans = [s.shifted(1) for s in link_mentions(words, kg)]
        if neighbors is not None:
            spans = [
                s.with_neighbors(neighbors.get(s.entity, ())) for s in spans
            ]
        with torch.no_grad():
            state = model(
                torch.from_numpy(ids[None, :]),
                torch.zeros(1, model.config.max_len, dtype=torch.int64),
                torch.from_numpy(mask[None, :]),
                mentions=[spans],
            )
        token_vectors = state.final[0, 1 : len(words) + 1]
        vectors[int(entity)] = token_vectors.mean(dim=0).numpy().copy()
    return vectors


def save_dataset(
    dataset: SimilarityDataset, kg: KnowledgeGraph, path: str | Path
) -> None:
    """JSONL by surface form: {query, positive, negatives[]} per sample."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in dataset.samples:
            record = {
                "query": kg.entities[s.query],
                "positive": kg.entities[s.positive],
                "negatives": [kg.entities[n] for n in s.negatives],
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_dataset(
    path: str | Path, kg: KnowledgeGraph, variant: str = "D1"
) -> SimilarityDataset:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc.msg})", line=line_no) from exc
            try:
                samples.append(
                    SimilaritySample(
                        query=kg.entity_id(record["query"]),
                        positive=kg.entity_id(record["positive"]),
                        negatives=tuple(
                            kg.entity_id(n) for n in record["negatives"]
                        ),
                    )
                )
            except KeyError as exc:
                raise FormatError(f"record lacks {exc}", line=line_no) from exc
    return SimilarityDataset(variant, samples)


def load_provider_tsv(path: str | Path) -> dict[str, np.ndarray]:
    """surface followed by its vector, one entity per line.

    Components are tab-separated; a single comma-separated field after the
    surface is accepted too.
    """
    table: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise FormatError(
                    f"expected surface<TAB>floats, got {line!r}", line=line_no
                )
            fields = parts[1].split(",") if len(parts) == 2 else parts[1:]
            try:
                vec = np.array([float(x) for x in fields], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(
                    f"bad float on line {line!r}", line=line_no
                ) from exc
            table[parts[0]] = vec
    return table


def provider_for_entities(
    table: Mapping[str, np.ndarray],
    kg: KnowledgeGraph,
    entities: Sequence[int],
) -> dict[int, np.ndarray]:
    """Resolve a surface-keyed table to entity ids, reporting gaps.

    Raises UnknownIdError naming the first 10 missing surfaces so callers
    can surface an actionable message.
    """
    missing = [
        kg.entities[e] for e in entities if kg.entities[e] not in table
    ]
    if missing:
        shown = ", ".join(repr(s) for s in missing[:10])
        raise UnknownIdError(
            f"provider lacks {len(missing)} entities (first: {shown})"
        )
    return {int(e): table[kg.entities[e]] for e in entities}


def dataset_entities(datasets: Sequence[SimilarityDataset]) -> list[int]:
    needed: set[int] = set()
    for ds in datasets:
        for s in ds.samples:
            needed.add(s.query)
            needed.update(s.candidates)
    return sorted(needed)
