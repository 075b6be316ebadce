"""Personalized neighbor ranking over the knowledge graph.

A damped power iteration is run per mention entity: the walk restarts at a
jump vector that puts unit weight on the mention and a uniform floor on
everything else, and the starting scores come from corpus frequencies so
well-attested entities begin with more mass. The entity's 1-hop neighbors
are then ranked by their stationary scores and the top K are kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .kernels import power_iteration
from .kg import FrequencyTable, KnowledgeGraph


@dataclass
class PeprResult:
    entity: int
    ranked: list[tuple[int, float]]  # (neighbor id, score), best first
    scores: np.ndarray               # stationary scores over all entities
    iterations: int
    converged: bool

    @property
    def neighbor_ids(self) -> list[int]:
        return [nbr for nbr, _ in self.ranked]


def build_csr(kg: KnowledgeGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CSR form of the symmetrized, deduplicated adjacency.

    Row i lists the distinct neighbors of entity i; ``inv_deg[j]`` is
    1/degree(j), with 0 marking dangling entities (the transition matrix is
    column-normalized, so each entity splits its mass over its neighbors).
    """
    z = kg.num_entities
    neighbor_sets = [sorted({nbr for _, nbr, _ in adj}) for adj in kg.adjacency]
    degrees = np.array([len(s) for s in neighbor_sets], dtype=np.int64)
    indptr = np.zeros(z + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])
    indices = np.fromiter(
        (nbr for s in neighbor_sets for nbr in s), dtype=np.int64, count=int(indptr[-1])
    )
    inv_deg = np.zeros(z, dtype=np.float64)
    nonzero = degrees > 0
    inv_deg[nonzero] = 1.0 / degrees[nonzero]
    return indptr, indices, inv_deg


def jump_vector(kg: KnowledgeGraph, mention_entity: int) -> np.ndarray:
    """Restart distribution: weight 1 on the mention, 1/Z elsewhere, normalized."""
    kg.check_entity(mention_entity)
    z = kg.num_entities
    p = np.full(z, 1.0 / z, dtype=np.float64)
    p[mention_entity] = 1.0
    return p / p.sum()


def initial_scores(
    kg: KnowledgeGraph, freq: FrequencyTable | None
) -> np.ndarray:
    """Starting distribution from corpus frequency.

    An entity seen in the corpus starts at count/total; one never seen
    starts at 1/sample_count. Without usable statistics the start is
    uniform. The result is normalized to sum to 1.
    """
    z = kg.num_entities
    if freq is None or freq.sample_count == 0 or freq.total == 0:
        return np.full(z, 1.0 / z, dtype=np.float64)
    v0 = freq.counts.astype(np.float64) / float(freq.total)
    v0[freq.counts == 0] = 1.0 / float(freq.sample_count)
    return v0 / v0.sum()


def pepr_scores(
    kg: KnowledgeGraph,
    freq: FrequencyTable | None,
    mention_entity: int,
    alpha: float = 0.85,
    tol: float = 1e-10,
    max_iters: int = 1000,
) -> tuple[np.ndarray, int, bool]:
    """Stationary scores of the damped walk personalized to ``mention_entity``."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    indptr, indices, inv_deg = build_csr(kg)
    jump = jump_vector(kg, mention_entity)
    v0 = initial_scores(kg, freq)
    return power_iteration(indptr, indices, inv_deg, jump, v0, alpha, tol, max_iters)


def _rank_candidates(
    candidates: list[int],
    scores: np.ndarray,
    freq: FrequencyTable | None,
    quantum: float = 1e-9,
) -> list[tuple[int, float]]:
    # quantizing the primary key keeps the order stable when two scores agree
    # up to power-iteration noise; counts then id break the remaining ties
    def key(nbr: int) -> tuple[int, int, int]:
        bucket = int(round(scores[nbr] / quantum))
        count = int(freq.counts[nbr]) if freq is not None else 0
        return (-bucket, -count, nbr)

    return [(nbr, float(scores[nbr])) for nbr in sorted(candidates, key=key)]


def top_k_neighbors(
    kg: KnowledgeGraph,
    freq: FrequencyTable | None,
    entity: int,
    k: int,
    alpha: float = 0.85,
    tol: float = 1e-10,
    max_iters: int = 1000,
) -> PeprResult:
    """Rank the 1-hop neighbors of ``entity`` by personalized score, keep top k.

    Ties are broken by corpus count (descending) then entity id (ascending),
    so the ranking is reproducible across runs and kernel backends. The
    entity itself is never a candidate even when it has a self loop.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    scores, iterations, converged = pepr_scores(
        kg, freq, entity, alpha=alpha, tol=tol, max_iters=max_iters
    )
    candidates = [nbr for nbr in kg.neighbor_ids(entity) if nbr != entity]
    ranked = _rank_candidates(candidates, scores, freq)[:k]
    return PeprResult(
        entity=entity,
        ranked=ranked,
        scores=scores,
        iterations=iterations,
        converged=converged,
    )
