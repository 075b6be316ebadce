"""Margin-based knowledge graph embeddings with per-relation projections.

Each relation carries its own projection matrix; a triple (h, r, t) is
scored by the distance between the projected head translated by the
relation vector and the projected tail. Training is plain per-sample SGD
on a margin ranking loss against one filtered corrupted triple per
positive. Entities are pulled back into the unit ball after every epoch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError, ConfigError
from .kg import KnowledgeGraph


@dataclass
class KgEmbeddings:
    entity: np.ndarray    # (Z, d)
    relation: np.ndarray  # (R, d)
    matrix: np.ndarray    # (R, d, d) per-relation projection

    @property
    def dim(self) -> int:
        return self.entity.shape[1]

    @property
    def num_entities(self) -> int:
        return self.entity.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relation.shape[0]


def score_triple(emb: KgEmbeddings, h: int, r: int, t: int) -> float:
    """Distance ‖h·M_r + r − t·M_r‖; lower means more plausible."""
    m = emb.matrix[r]
    residual = emb.entity[h] @ m + emb.relation[r] - emb.entity[t] @ m
    return float(np.linalg.norm(residual))


def score_tails(emb: KgEmbeddings, h: int, r: int) -> np.ndarray:
    """Distances of (h, r, candidate) for every candidate tail at once."""
    m = emb.matrix[r]
    translated = emb.entity[h] @ m + emb.relation[r]
    return np.linalg.norm(translated - emb.entity @ m, axis=1)


def score_heads(emb: KgEmbeddings, r: int, t: int) -> np.ndarray:
    m = emb.matrix[r]
    target = emb.entity[t] @ m - emb.relation[r]
    return np.linalg.norm(emb.entity @ m - target, axis=1)


def init_embeddings(
    num_entities: int,
    num_relations: int,
    dim: int,
    seed: int = 0,
    matrix_noise: float = 0.01,
) -> KgEmbeddings:
    """Uniform ±6/√d vectors; projections start near the identity so early
    scores behave like plain translation."""
    rng = np.random.default_rng(seed)
    bound = 6.0 / np.sqrt(dim)
    entity = rng.uniform(-bound, bound, size=(num_entities, dim))
    relation = rng.uniform(-bound, bound, size=(num_relations, dim))
    norms = np.linalg.norm(relation, axis=1, keepdims=True)
    relation = relation / np.maximum(norms, 1e-12)
    matrix = np.tile(np.eye(dim), (num_relations, 1, 1))
    matrix += matrix_noise * rng.standard_normal((num_relations, dim, dim))
    return KgEmbeddings(entity=entity, relation=relation, matrix=matrix)


def _corrupt(
    triple: tuple[int, int, int],
    num_entities: int,
    triple_set: set[tuple[int, int, int]],
    rng: np.random.Generator,
    max_tries: int = 50,
) -> tuple[int, int, int] | None:
    h, r, t = triple
    corrupt_head = rng.random() < 0.5
    for _ in range(max_tries):
        candidate = int(rng.integers(num_entities))
        corrupted = (candidate, r, t) if corrupt_head else (h, r, candidate)
        if corrupted not in triple_set and corrupted != triple:
            return corrupted
    return None


def train_transr(
    kg: KnowledgeGraph,
    dim: int,
    epochs: int,
    lr: float = 0.01,
    margin: float = 1.0,
    seed: int = 0,
    matrix_noise: float = 0.01,
) -> tuple[KgEmbeddings, list[float]]:
    """SGD on max(0, margin + f(pos) − f(neg)), one corrupted triple per
    positive, corruptions filtered against the known triple set.

    Returns the embeddings and the mean margin loss per epoch. Uses a
    single seeded generator for init, shuffling, and corruption so runs
    are bit-reproducible.
    """
    if dim < 1:
        raise ConfigError(f"dim must be >= 1, got {dim}")
    if epochs < 0:
        raise ConfigError(f"epochs must be >= 0, got {epochs}")
    if kg.triples.shape[0] == 0:
        raise ConfigError("cannot train embeddings on a graph with no triples")

    rng = np.random.default_rng(seed)
    emb = init_embeddings(
        kg.num_entities,
        kg.num_relations,
        dim,
        seed=int(rng.integers(2**31 - 1)),
        matrix_noise=matrix_noise,
    )
    triples = [tuple(int(x) for x in row) for row in kg.triples]
    losses: list[float] = []

    for _ in range(epochs):
        order = rng.permutation(len(triples))
        epoch_loss = 0.0
        for idx in order:
            pos = triples[idx]
            neg = _corrupt(pos, kg.num_entities, kg.triple_set, rng)
            if neg is None:
                continue
            epoch_loss += _sgd_step(emb, pos, neg, lr, margin)
        # project entities back into the unit ball so distances stay bounded
        norms = np.linalg.norm(emb.entity, axis=1)
        over = norms > 1.0
        emb.entity[over] /= norms[over, None]
        losses.append(epoch_loss / len(triples))

    return emb, losses


def _sgd_step(
    emb: KgEmbeddings,
    pos: tuple[int, int, int],
    neg: tuple[int, int, int],
    lr: float,
    margin: float,
) -> float:
    f_pos, grads_pos = _score_with_grads(emb, pos)
    f_neg, grads_neg = _score_with_grads(emb, neg)
    loss = margin + f_pos - f_neg
    if loss <= 0.0:
        return 0.0
    _apply(emb, pos, grads_pos, -lr)
    _apply(emb, neg, grads_neg, +lr)
    return loss


def _score_with_grads(emb: KgEmbeddings, triple: tuple[int, int, int]):
    h, r, t = triple
    m = emb.matrix[r]
    residual = emb.entity[h] @ m + emb.relation[r] - emb.entity[t] @ m
    norm = float(np.linalg.norm(residual))
    if norm < 1e-12:
        unit = np.zeros_like(residual)
    else:
        unit = residual / norm
    grad_h = m @ unit
    grad_m = np.outer(emb.entity[h] - emb.entity[t], unit)
    return norm, (grad_h, unit, -grad_h, grad_m)


def _apply(emb, triple, grads, step):
    h, r, t = triple
    grad_h, grad_r, grad_t, grad_m = grads
    emb.entity[h] += step * grad_h
    emb.relation[r] += step * grad_r
    emb.entity[t] += step * grad_t
    emb.matrix[r] += step * grad_m


def hits_at_k(
    emb: KgEmbeddings,
    kg: KnowledgeGraph,
    k: int = 10,
    triples: np.ndarray | None = None,
    filtered: bool = True,
) -> float:
    """Fraction of triples whose true tail ranks in the best k candidates.

    With ``filtered`` the other known tails of (h, r, ·) are pushed behind
    every candidate before ranking, the usual link-prediction protocol.
    """
    if triples is None:
        triples = kg.triples
    if len(triples) == 0:
        return 0.0
    hits = 0
    for h, r, t in triples:
        h, r, t = int(h), int(r), int(t)
        distances = score_tails(emb, h, r)
        if filtered:
            others = [
                tail
                for (hh, rr, tail) in kg.triple_set
                if hh == h and rr == r and tail != t
            ]
            if others:
                distances = distances.copy()
                distances[others] = np.inf
        rank = int((distances < distances[t]).sum()) + 1
        if rank <= k:
            hits += 1
    return hits / len(triples)


_MANIFEST_NAME = "manifest.json"


def save_embeddings(emb: KgEmbeddings, directory: str | Path) -> None:
    """Write a JSON manifest plus little-endian float32 blobs."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    parts = {
        "entity.bin": emb.entity,
        "relation.bin": emb.relation,
        "matrix.bin": emb.matrix,
    }
    manifest = {
        "dim": emb.dim,
        "num_entities": emb.num_entities,
        "num_relations": emb.num_relations,
        "dtype": "float32",
        "files": sorted(parts),
    }
    (directory / _MANIFEST_NAME).write_text(json.dumps(manifest, indent=1))
    for name, arr in parts.items():
        (directory / name).write_bytes(arr.astype("<f4").tobytes())


def load_embeddings(directory: str | Path) -> KgEmbeddings:
    directory = Path(directory)
    manifest_path = directory / _MANIFEST_NAME
    if not manifest_path.exists():
        raise CheckpointError(f"no {_MANIFEST_NAME} in {directory}")
    manifest = json.loads(manifest_path.read_text())
    z, r, d = manifest["num_entities"], manifest["num_relations"], manifest["dim"]
    shapes = {"entity.bin": (z, d), "relation.bin": (r, d), "matrix.bin": (r, d, d)}

    arrays = {}
    for name, shape in shapes.items():
        raw = (directory / name).read_bytes()
        expected = int(np.prod(shape)) * 4
        if len(raw) != expected:
            raise CheckpointError(
                f"{name} has {len(raw)} bytes, manifest expects {expected}"
            )
        arrays[name] = (
            np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)
        )
    return KgEmbeddings(
        entity=arrays["entity.bin"],
        relation=arrays["relation.bin"],
        matrix=arrays["matrix.bin"],
    )
