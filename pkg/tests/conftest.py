"""Shared fixtures: a handcrafted micro graph and a generated toy world.

The toy world and anything derived from it are session-scoped because
they are deterministic and read-only; tests that mutate state build their
own objects.
"""

from __future__ import annotations

import pytest

from kgfuse.config import ModelConfig
from kgfuse.kg import load_kg
from kgfuse.synthetic import build_toy_world
from kgfuse.transr import train_transr

TINY_TYPES = [
    "aspirin\tdrug",
    "ibuprofen\tdrug",
    "headache\tsymptom",
    "fever\tsymptom",
    "flu\tdisease",
]

TINY_TRIPLES = [
    "aspirin\ttreats\theadache",
    "aspirin\ttreats\tfever",
    "ibuprofen\ttreats\theadache",
    "flu\tcauses\tfever",
    "flu\tcauses\theadache",
]


@pytest.fixture
def tiny_kg():
    return load_kg(TINY_TRIPLES, TINY_TYPES)


@pytest.fixture(scope="session")
def world():
    return build_toy_world(seed=42)


@pytest.fixture(scope="session")
def world_files(world, tmp_path_factory):
    directory = tmp_path_factory.mktemp("world")
    return world.write(directory)


@pytest.fixture(scope="session")
def world_embeddings(world):
    emb, _ = train_transr(world.kg, dim=16, epochs=30, seed=0)
    return emb


def small_config(**overrides) -> ModelConfig:
    """Desk-scale config; callers override what their test cares about."""
    settings = dict(
        d1=32,
        d2=16,
        layers=2,
        heads=2,
        vocab_size=64,
        max_len=32,
        k=5,
        k_neg=5,
        injection_layer=1,
        seed=0,
    )
    settings.update(overrides)
    return ModelConfig(**settings).validate()
