"""Knowledge graph loading, indexing, and corpus mention statistics.

The graph is immutable after construction: entities and relations are
id-indexed tables, triples are a deduplicated (head, relation, tail) array,
and the adjacency lists both directions of every triple exactly once each.
Entities that appear only in the triples file are created with the reserved
type id 0 ("untyped") and participate normally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import FormatError, UnknownIdError

UNTYPED = 0
UNTYPED_NAME = "untyped"

FORWARD = 0   # entity is the head of the triple
BACKWARD = 1  # entity is the tail of the triple


@dataclass
class KnowledgeGraph:
    entities: list[str]                 # surface form per entity id
    entity_types: np.ndarray            # type id per entity id
    type_names: list[str]               # name per type id; id 0 is "untyped"
    relations: list[str]                # name per relation id
    triples: np.ndarray                 # (n, 3) int64 rows of (head, rel, tail)
    surface_to_id: dict[str, int] = field(repr=False)
    adjacency: list[list[tuple[int, int, int]]] = field(repr=False)
    type_index: dict[int, list[int]] = field(repr=False)
    triple_set: set[tuple[int, int, int]] = field(repr=False)

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_relations(self) -> int:
        return len(self.relations)

    def entity_id(self, surface: str) -> int:
        try:
            return self.surface_to_id[surface]
        except KeyError:
            raise UnknownIdError(f"unknown entity surface {surface!r}") from None

    def relation_id(self, name: str) -> int:
        try:
            return self.relations.index(name)
        except ValueError:
            raise UnknownIdError(f"unknown relation {name!r}") from None

    def check_entity(self, e: int) -> None:
        if not 0 <= e < len(self.entities):
            raise UnknownIdError(f"entity id {e} out of range [0, {len(self.entities)})")

    def neighbor_ids(self, e: int) -> list[int]:
        """Distinct 1-hop neighbors of ``e`` (both triple directions), ascending."""
        self.check_entity(e)
        return sorted({nbr for _, nbr, _ in self.adjacency[e]})


def _build(
    entity_rows: list[tuple[str, str]],
    triple_rows: list[tuple[str, str, str]],
) -> KnowledgeGraph:
    entities: list[str] = []
    surface_to_id: dict[str, int] = {}
    entity_types: list[int] = []
    type_names: list[str] = [UNTYPED_NAME]
    type_ids: dict[str, int] = {UNTYPED_NAME: UNTYPED}

    for line_no, (surface, type_name) in enumerate(entity_rows, start=1):
        if surface in surface_to_id:
            raise FormatError(
                f"duplicate entity surface {surface!r}: ids "
                f"{surface_to_id[surface]} and {len(entities)}",
                line=line_no,
            )
        if type_name not in type_ids:
            type_ids[type_name] = len(type_names)
            type_names.append(type_name)
        surface_to_id[surface] = len(entities)
        entities.append(surface)
        entity_types.append(type_ids[type_name])

    relations: list[str] = []
    relation_ids: dict[str, int] = {}
    triple_list: list[tuple[int, int, int]] = []
    triple_set: set[tuple[int, int, int]] = set()

    for head, rel, tail in triple_rows:
        for surface in (head, tail):
            if surface not in surface_to_id:
                surface_to_id[surface] = len(entities)
                entities.append(surface)
                entity_types.append(UNTYPED)
        if rel not in relation_ids:
            relation_ids[rel] = len(relations)
            relations.append(rel)
        triple = (surface_to_id[head], relation_ids[rel], surface_to_id[tail])
        if triple not in triple_set:
            triple_set.add(triple)
            triple_list.append(triple)

    adjacency: list[list[tuple[int, int, int]]] = [[] for _ in entities]
    for h, r, t in triple_list:
        adjacency[h].append((r, t, FORWARD))
        adjacency[t].append((r, h, BACKWARD))

    type_index: dict[int, list[int]] = {tid: [] for tid in range(len(type_names))}
    for eid, tid in enumerate(entity_types):
        type_index[tid].append(eid)

    triples = (
        np.array(triple_list, dtype=np.int64)
        if triple_list
        else np.empty((0, 3), dtype=np.int64)
    )
    return KnowledgeGraph(
        entities=entities,
        entity_types=np.array(entity_types, dtype=np.int64),
        type_names=type_names,
        relations=relations,
        triples=triples,
        surface_to_id=surface_to_id,
        adjacency=adjacency,
        type_index=type_index,
        triple_set=triple_set,
    )


def _lines(source: Iterable[str] | str | Path) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def load_kg(
    triples_source: Iterable[str] | str | Path,
    types_source: Iterable[str] | str | Path,
) -> KnowledgeGraph:
    """Build a graph from tab-separated sources.

    Types rows are ``entity<TAB>type``; triples rows are
    ``head<TAB>relation<TAB>tail``. Blank lines are skipped. Duplicate
    triples collapse (the triple collection is a set); a duplicated entity
    surface in the types file is an error because exact-match linking
    requires unique surfaces.
    """
    entity_rows: list[tuple[str, str]] = []
    seen: dict[str, int] = {}
    for line_no, raw in enumerate(_lines(types_source), start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise FormatError(f"expected entity<TAB>type, got {line!r}", line=line_no)
        if parts[0] in seen:
            raise FormatError(
                f"duplicate entity surface {parts[0]!r}: ids {seen[parts[0]]} "
                f"and {len(entity_rows)}",
                line=line_no,
            )
        seen[parts[0]] = len(entity_rows)
        entity_rows.append((parts[0], parts[1]))

    triple_rows: list[tuple[str, str, str]] = []
    for line_no, raw in enumerate(_lines(triples_source), start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3 or not all(parts):
            raise FormatError(
                f"expected head<TAB>relation<TAB>tail, got {line!r}", line=line_no
            )
        triple_rows.append((parts[0], parts[1], parts[2]))

    return _build(entity_rows, triple_rows)


def neighbor_set(kg: KnowledgeGraph, e: int) -> list[tuple[int, int]]:
    """Distinct (relation id, neighbor id) pairs of ``e``, covering both
    triple directions, ordered by neighbor id then relation id."""
    kg.check_entity(e)
    pairs = {(r, nbr) for r, nbr, _ in kg.adjacency[e]}
    return sorted(pairs, key=lambda p: (p[1], p[0]))


@dataclass
class FrequencyTable:
    counts: np.ndarray      # occurrences per entity id
    total: int              # sum of all counts
    sample_count: int       # number of corpus documents
    type_sums: dict[int, int]  # per-type sum of counts

    @classmethod
    def from_counts(
        cls, kg: KnowledgeGraph, counts: np.ndarray, sample_count: int
    ) -> "FrequencyTable":
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (kg.num_entities,):
            raise ValueError(
                f"counts shape {counts.shape} != ({kg.num_entities},)"
            )
        type_sums = {
            tid: int(counts[ids].sum()) if ids else 0
            for tid, ids in kg.type_index.items()
        }
        return cls(
            counts=counts,
            total=int(counts.sum()),
            sample_count=sample_count,
            type_sums=type_sums,
        )


def scan_mentions(text: str, surface_to_id: dict[str, int]) -> list[tuple[int, int]]:
    """Left-to-right, longest-match, non-overlapping scan of ``text``.

    Returns (character position, entity id) pairs. Positions never overlap:
    after a match the scan resumes past its last character.
    """
    if not surface_to_id:
        return []
    max_len = max(len(s) for s in surface_to_id)
    first_chars = {s[0] for s in surface_to_id}
    hits: list[tuple[int, int]] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i] not in first_chars:
            i += 1
            continue
        matched = None
        for length in range(min(max_len, n - i), 0, -1):
            candidate = text[i : i + length]
            if candidate in surface_to_id:
                matched = (length, surface_to_id[candidate])
                break
        if matched is None:
            i += 1
        else:
            hits.append((i, matched[1]))
            i += matched[0]
    return hits


def count_mention_frequencies(
    corpus: Iterable[str], kg: KnowledgeGraph
) -> FrequencyTable:
    """Count exact-match entity mentions across corpus documents.

    Matching is longest-match, left-to-right, non-overlapping over each
    document's text. The sample count is the number of documents.
    """
    counts = np.zeros(kg.num_entities, dtype=np.int64)
    docs = 0
    for text in corpus:
        docs += 1
        for _, eid in scan_mentions(text, kg.surface_to_id):
            counts[eid] += 1
    return FrequencyTable.from_counts(kg, counts, docs)


def read_corpus_jsonl(path: str | Path) -> Iterator[str]:
    """Yield the "text" field of every JSONL record in ``path``."""
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc.msg})", line=line_no) from exc
            if not isinstance(record, dict) or "text" not in record:
                raise FormatError('record lacks a "text" field', line=line_no)
            yield record["text"]


_MANIFEST_NAME = "manifest.json"
_EDGES_NAME = "edges.bin"


def save_kg(kg: KnowledgeGraph, directory: str | Path) -> None:
    """Persist as a JSON manifest plus a little-endian uint32 edge list."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "entities": kg.entities,
        "entity_types": kg.entity_types.tolist(),
        "type_names": kg.type_names,
        "relations": kg.relations,
        "num_triples": int(kg.triples.shape[0]),
    }
    (directory / _MANIFEST_NAME).write_text(
        json.dumps(manifest, ensure_ascii=False, indent=1), encoding="utf-8"
    )
    edges = kg.triples.astype("<u4")
    (directory / _EDGES_NAME).write_bytes(edges.tobytes())


def load_saved_kg(directory: str | Path) -> KnowledgeGraph:
    directory = Path(directory)
    manifest_path = directory / _MANIFEST_NAME
    if not manifest_path.exists():
        raise FormatError(f"no {_MANIFEST_NAME} in {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    raw = (directory / _EDGES_NAME).read_bytes()
    expected = manifest["num_triples"] * 3 * 4
    if len(raw) != expected:
        raise FormatError(
            f"edge list has {len(raw)} bytes, manifest expects {expected}"
        )
    triples = np.frombuffer(raw, dtype="<u4").astype(np.int64).reshape(-1, 3)
    # rebuild from the manifest's id-ordered tables directly; re-parsing
    # through load_kg could renumber types whose first appearance differs
    return _rebuild_with_types(manifest, triples)


def _rebuild_with_types(manifest: dict, triples: np.ndarray) -> KnowledgeGraph:
    entities = list(manifest["entities"])
    entity_types = np.array(manifest["entity_types"], dtype=np.int64)
    type_names = list(manifest["type_names"])
    relations = list(manifest["relations"])
    surface_to_id = {s: i for i, s in enumerate(entities)}

    triple_list: list[tuple[int, int, int]] = []
    triple_set: set[tuple[int, int, int]] = set()
    for h, r, t in triples:
        triple = (int(h), int(r), int(t))
        if triple not in triple_set:
            triple_set.add(triple)
            triple_list.append(triple)

    adjacency: list[list[tuple[int, int, int]]] = [[] for _ in entities]
    for h, r, t in triple_list:
        adjacency[h].append((r, t, FORWARD))
        adjacency[t].append((r, h, BACKWARD))
    type_index: dict[int, list[int]] = {tid: [] for tid in range(len(type_names))}
    for eid, tid in enumerate(entity_types):
        type_index[int(tid)].append(eid)

    return KnowledgeGraph(
        entities=entities,
        entity_types=entity_types,
        type_names=type_names,
        relations=relations,
        triples=np.array(triple_list, dtype=np.int64).reshape(-1, 3),
        surface_to_id=surface_to_id,
        adjacency=adjacency,
        type_index=type_index,
        triple_set=triple_set,
    )
