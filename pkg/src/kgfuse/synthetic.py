"""Deterministic toy worlds: a typed KG with planted synonym pairs plus a
templated corpus that mentions the entities.

Surfaces are type-prefixed so same-typed entities are confusably similar
under string similarity (the negative pools need that), and each synonym
pair shares a block of hub neighbors so structural filters and knowledge
infusion have real signal. Even-indexed pairs share their whole hub
block; odd-indexed pairs overlap in only three hubs and get private ones,
which keeps them out of the high-overlap variant while still passing the
common-neighbor floor. Odd pairs are also mentioned only a handful of
times, making them the rare pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kg import FrequencyTable, KnowledgeGraph, count_mention_frequencies, load_kg
from .tokenizer import Vocab

EQUIVALENCE = "same_as"

_TYPES = ("disease", "drug", "symptom")
_PREFIXES = {"disease": "dis", "drug": "dru", "symptom": "sym"}
_GREEK = (
    "alpha beta gamma delta epsilon zeta eta theta iota kappa lambda mu nu "
    "xi omicron pi rho sigma tau upsilon phi chi psi omega"
).split()
_TEMPLATE = (
    "study reports that with shows strong response in patients during "
    "trial followup group control"
).split()


@dataclass
class ToyWorld:
    kg: KnowledgeGraph
    corpus: list[str]
    vocab: Vocab
    freq: FrequencyTable
    types_lines: list[str]
    triples_lines: list[str]
    synonym_pairs: list[tuple[int, int]]
    rare_pairs: list[tuple[int, int]]
    equivalence: str = EQUIVALENCE

    def write(self, directory: str | Path) -> dict[str, Path]:
        """Materialize the world as the files the CLI consumes."""
        import json

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "triples": directory / "triples.tsv",
            "types": directory / "types.tsv",
            "corpus": directory / "corpus.jsonl",
            "vocab": directory / "vocab.txt",
        }
        paths["triples"].write_text("\n".join(self.triples_lines) + "\n")
        paths["types"].write_text("\n".join(self.types_lines) + "\n")
        with open(paths["corpus"], "w", encoding="utf-8") as fh:
            for text in self.corpus:
                fh.write(json.dumps({"text": text}) + "\n")
        self.vocab.save(paths["vocab"])
        return paths


def build_toy_world(
    seed: int = 42,
    entities_per_type: int = 8,
    synonym_pairs_per_type: int = 2,
    shared_hubs: int = 8,
    docs: int = 200,
    filler_vocab: int = 120,
    words_per_doc: int = 14,
    rare_mentions: int = 2,
    multiword_entities: int = 2,
) -> ToyWorld:
    """Generate a world; everything is a function of the arguments alone.

    ``entities_per_type`` must be at least ``synonym_pairs_per_type + 2``
    so non-synonym entities exist, and at least shared_hubs/2 per type so
    hub demand can be met from the other types.
    """
    if entities_per_type < synonym_pairs_per_type + 2:
        raise ValueError("need more entities per type than synonym pairs")
    if len(_GREEK) < entities_per_type:
        raise ValueError(f"at most {len(_GREEK)} entities per type")
    if not 7 <= shared_hubs <= 2 * (entities_per_type - synonym_pairs_per_type):
        raise ValueError(
            "shared_hubs must be >= 7 (the odd-pair split needs that many) "
            "and fit in the two other types' non-pair entities"
        )
    rng = np.random.default_rng(seed)

    base: dict[str, list[str]] = {}
    twins: dict[str, list[str]] = {}
    types_lines: list[str] = []
    for type_name in _TYPES:
        prefix = _PREFIXES[type_name]
        base[type_name] = [
            f"{prefix}{_GREEK[i]}{i}" for i in range(entities_per_type)
        ]
        twins[type_name] = [
            base[type_name][p] + "x" for p in range(synonym_pairs_per_type)
        ]
        for surface in base[type_name] + twins[type_name]:
            types_lines.append(f"{surface}\t{type_name}")

    multiword: list[str] = []
    for j in range(multiword_entities):
        type_name = _TYPES[j % len(_TYPES)]
        inner = base[type_name][entities_per_type - 1 - j]
        surface = f"acute {inner}"
        multiword.append(surface)
        types_lines.append(f"{surface}\t{type_name}")

    triples_lines: list[str] = []
    synonym_surfaces: list[tuple[str, str]] = []
    rare_surfaces: list[tuple[str, str]] = []
    for t_idx, type_name in enumerate(_TYPES):
        # hubs come from the other two types' NON-pair entities: pair
        # members must not pick up stray neighbor edges or the planted
        # neighborhood overlap of each pair would be diluted
        hub_pool = []
        for other in _TYPES:
            if other != type_name:
                hub_pool.extend(base[other][synonym_pairs_per_type:])
        for p in range(synonym_pairs_per_type):
            a = base[type_name][p]
            b = twins[type_name][p]
            synonym_surfaces.append((a, b))
            triples_lines.append(f"{a}\t{EQUIVALENCE}\t{b}")
            start = (t_idx * synonym_pairs_per_type + p) * shared_hubs
            hubs = [hub_pool[(start + i) % len(hub_pool)] for i in range(shared_hubs)]
            if p % 2 == 0:
                for hub in hubs:
                    triples_lines.append(f"{a}\trelated_to\t{hub}")
                    triples_lines.append(f"{b}\trelated_to\t{hub}")
            else:
                rare_surfaces.append((a, b))
                for hub in hubs[:3]:
                    triples_lines.append(f"{a}\trelated_to\t{hub}")
                    triples_lines.append(f"{b}\trelated_to\t{hub}")
                for hub in hubs[3:5]:
                    triples_lines.append(f"{a}\trelated_to\t{hub}")
                for hub in hubs[5:7]:
                    triples_lines.append(f"{b}\trelated_to\t{hub}")
        # plain entities get cross-type edges for graph texture; targets
        # stay outside the pair range for the same dilution reason
        next_type = _TYPES[(t_idx + 1) % len(_TYPES)]
        plain = entities_per_type - synonym_pairs_per_type
        for i in range(synonym_pairs_per_type, entities_per_type):
            for j in range(2):
                offset = synonym_pairs_per_type + (i + j) % plain
                target = base[next_type][offset]
                triples_lines.append(f"{base[type_name][i]}\ttreats\t{target}")
    for j, surface in enumerate(multiword):
        anchor_type = _TYPES[(j + 1) % len(_TYPES)]
        plain = entities_per_type - synonym_pairs_per_type
        anchor = base[anchor_type][synonym_pairs_per_type + j % plain]
        triples_lines.append(f"{surface}\trelated_to\t{anchor}")

    kg = load_kg(triples_lines, types_lines)

    rare_set = {s for pair in rare_surfaces for s in pair}
    common_mentionable = [
        surface
        for surface, _ in (line.split("\t") for line in types_lines)
        if surface not in rare_set
    ]
    hub_of: dict[str, list[str]] = {}
    for surface in common_mentionable + sorted(rare_set):
        eid = kg.entity_id(surface)
        hub_of[surface] = [
            kg.entities[nbr]
            for nbr in kg.neighbor_ids(eid)
            if kg.entities[nbr] not in rare_set
        ]

    fillers = [f"w{i:03d}" for i in range(filler_vocab)]

    def make_doc(entity_surface: str) -> str:
        words: list[str] = []
        words.extend(_TEMPLATE[int(rng.integers(len(_TEMPLATE)))] for _ in range(2))
        words.extend(entity_surface.split())
        words.append("linked")
        hubs = hub_of[entity_surface]
        if hubs:
            words.extend(hubs[int(rng.integers(len(hubs)))].split())
        words.append(_TEMPLATE[int(rng.integers(len(_TEMPLATE)))])
        while len(words) < words_per_doc:
            words.append(fillers[int(rng.integers(len(fillers)))])
        return " ".join(words)

    corpus: list[str] = []
    for surface in sorted(rare_set):
        for _ in range(rare_mentions):
            corpus.append(make_doc(surface))
    while len(corpus) < docs:
        surface = common_mentionable[int(rng.integers(len(common_mentionable)))]
        corpus.append(make_doc(surface))

    vocab = Vocab.from_texts(corpus)
    freq = count_mention_frequencies(corpus, kg)
    synonym_pairs = [
        (kg.entity_id(a), kg.entity_id(b)) for a, b in synonym_surfaces
    ]
    rare_pairs = [(kg.entity_id(a), kg.entity_id(b)) for a, b in rare_surfaces]
    return ToyWorld(
        kg=kg,
        corpus=corpus,
        vocab=vocab,
        freq=freq,
        types_lines=types_lines,
        triples_lines=triples_lines,
        synonym_pairs=synonym_pairs,
        rare_pairs=rare_pairs,
    )
