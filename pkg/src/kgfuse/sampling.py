"""Frequency-proportional negative sampling, stratified by entity type.

Each type gets a Walker alias table over its member entities with
probability proportional to smoothed corpus counts, so draws are O(1) and
entities never seen in the corpus still have non-zero probability when
smoothing is on.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, UnknownIdError
from .kg import FrequencyTable, KnowledgeGraph


class AliasTable:
    """Walker alias method over a fixed categorical distribution."""

    def __init__(self, probs: np.ndarray):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ConfigError("alias table needs a non-empty 1-D distribution")
        if (probs < 0).any():
            raise ConfigError("alias table probabilities must be non-negative")
        total = probs.sum()
        if total <= 0:
            raise ConfigError("alias table probabilities sum to zero")
        self.probs = probs / total

        n = probs.size
        scaled = list(self.probs * n)
        self.threshold = np.ones(n, dtype=np.float64)
        self.alias = np.arange(n, dtype=np.int64)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            l = large.pop()
            self.threshold[s] = scaled[s]
            self.alias[s] = l
            scaled[l] -= 1.0 - scaled[s]
            (small if scaled[l] < 1.0 else large).append(l)
        # whatever remains has weight 1 up to rounding; threshold stays 1

    def __len__(self) -> int:
        return self.threshold.size

    def sample(self, rng: np.random.Generator) -> int:
        i = int(rng.integers(len(self)))
        return i if rng.random() < self.threshold[i] else int(self.alias[i])


class NegativeSampler:
    """Per-type samplers with Q(e) = (t_e + s) / Σ_type (t + s).

    ``s`` is the smoothing constant; the default 1.0 keeps every entity
    reachable. Setting s=0 recovers the raw count ratios (entities with
    zero count then have Q = 0 and are never drawn).
    """

    def __init__(
        self,
        kg: KnowledgeGraph,
        freq: FrequencyTable | None,
        smoothing: float = 1.0,
    ):
        if smoothing < 0:
            raise ConfigError(f"smoothing must be >= 0, got {smoothing}")
        counts = (
            freq.counts.astype(np.float64)
            if freq is not None
            else np.zeros(kg.num_entities, dtype=np.float64)
        )
        self.smoothing = smoothing
        self.entity_types = kg.entity_types
        self.type_members: dict[int, np.ndarray] = {}
        self.type_probs: dict[int, np.ndarray] = {}
        self._tables: dict[int, AliasTable] = {}
        self._q = np.zeros(kg.num_entities, dtype=np.float64)

        for type_id, members in kg.type_index.items():
            if not members:
                continue
            ids = np.array(members, dtype=np.int64)
            weights = counts[ids] + smoothing
            total = weights.sum()
            if total <= 0:
                # all-zero counts with no smoothing: fall back to uniform
                probs = np.full(ids.size, 1.0 / ids.size)
            else:
                probs = weights / total
            self.type_members[type_id] = ids
            self.type_probs[type_id] = probs
            self._tables[type_id] = AliasTable(probs)
            self._q[ids] = probs

    def has_type(self, type_id: int) -> bool:
        return type_id in self._tables

    def q(self, entity: int) -> float:
        """Q(e): the entity's probability within its own type."""
        if not 0 <= entity < self._q.size:
            raise UnknownIdError(f"entity id {entity} out of range")
        return float(self._q[entity])

    def sample(self, type_id: int, rng: np.random.Generator) -> int:
        if type_id not in self._tables:
            raise UnknownIdError(f"no entities of type {type_id} to sample")
        ids = self.type_members[type_id]
        return int(ids[self._tables[type_id].sample(rng)])

    def sample_excluding(
        self,
        type_id: int,
        exclude: int,
        rng: np.random.Generator,
        max_tries: int = 1000,
    ) -> int | None:
        """One draw that avoids ``exclude``, resampling on collision.

        Returns None when the type holds nothing but the excluded entity;
        after ``max_tries`` collisions the smallest other id is taken so a
        pathological distribution cannot stall training.
        """
        if type_id not in self._tables:
            raise UnknownIdError(f"no entities of type {type_id} to sample")
        ids = self.type_members[type_id]
        if ids.size == 1 and int(ids[0]) == exclude:
            return None
        for _ in range(max_tries):
            candidate = self.sample(type_id, rng)
            if candidate != exclude:
                return candidate
        others = ids[ids != exclude]
        return int(others[0]) if others.size else None


def sample_negatives(
    sampler: NegativeSampler, type_id: int, k_neg: int, seed: int
) -> list[int]:
    """k_neg i.i.d. draws from the type's distribution (no exclusions)."""
    if k_neg < 0:
        raise ConfigError(f"k_neg must be >= 0, got {k_neg}")
    rng = np.random.default_rng(seed)
    return [sampler.sample(type_id, rng) for _ in range(k_neg)]
