"""Pretraining orchestration: warmup, snapshot, main loop, and run records.

The token-prediction warmup runs first so the input embeddings carry
signal before they are frozen into the mention-regression target table.
Every random choice is derived from the run seed, making double-precision
runs bit-reproducible end to end.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import torch

from .batching import build_pretrain_batch, neighbor_cache
from .config import ModelConfig
from .kg import FrequencyTable, KnowledgeGraph, scan_mentions
from .model.knowledge_model import KnowledgeModel
from .objectives import KgTensors, MmemTarget, compute_losses
from .sampling import NegativeSampler
from .tokenizer import Vocab

# distinct strides decorrelate the per-step seeds of the two RNG consumers
_BATCH_STRIDE = 7919
_NEGATIVE_STRIDE = 104729


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    config: dict
    seed: int
    inputs: dict[str, dict[str, str]] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    wall_clock_s: float = 0.0
    loss_log: str = ""

    def add_input(self, label: str, path: str | Path) -> None:
        self.inputs[label] = {"path": str(path), "sha256": file_digest(path)}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.__dict__, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def _document_batches(
    documents: Sequence[str], batch_size: int, seed: int
) -> Iterator[list[str]]:
    """Cycle documents forever, reshuffling at every epoch boundary."""
    rng = np.random.default_rng(seed)
    while True:
        order = rng.permutation(len(documents))
        for start in range(0, len(order) - batch_size + 1, batch_size):
            yield [documents[i] for i in order[start : start + batch_size]]


def linked_entities(documents: Sequence[str], kg: KnowledgeGraph) -> list[int]:
    """Every entity the corpus mentions at least once, ascending."""
    found: set[int] = set()
    for text in documents:
        found.update(eid for _, eid in scan_mentions(text, kg.surface_to_id))
    return sorted(found)


def warmup_token_predictor(
    model: KnowledgeModel,
    batches: Iterator[list[str]],
    kg: KnowledgeGraph,
    freq: FrequencyTable | None,
    vocab: Vocab,
    config: ModelConfig,
    steps: int,
    lr: float,
    seed: int,
) -> None:
    """Masked-token-only warmup; no infusion, no order prediction.

    Gives the input embeddings enough structure to serve as the frozen
    regression target table afterwards.
    """
    if steps == 0:
        return
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    empty_neighbors: dict[int, tuple[tuple[int, int], ...]] = {}
    for step in range(1, steps + 1):
        batch = build_pretrain_batch(
            next(batches),
            kg,
            freq,
            vocab,
            config,
            seed=seed + _BATCH_STRIDE * step,
            neighbors=empty_neighbors,
            swap_prob=0.0,
        )
        state = model(batch.ids, batch.segments, batch.mask, mentions=None)
        logits = model.mlm_head(state.final)
        flat_labels = batch.mlm_labels.reshape(-1)
        selected = flat_labels != -1
        loss = torch.nn.functional.cross_entropy(
            logits.reshape(-1, logits.shape[-1])[selected], flat_labels[selected]
        )
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()


@dataclass
class TrainResult:
    history: list[dict]
    mmem_target: MmemTarget
    wall_clock_s: float


def train(
    model: KnowledgeModel,
    documents: Sequence[str],
    kg: KnowledgeGraph,
    freq: FrequencyTable | None,
    vocab: Vocab,
    kg_t: KgTensors,
    sampler: NegativeSampler,
    config: ModelConfig,
    steps: int,
    batch_size: int = 8,
    lr: float = 1e-3,
    seed: int = 42,
    log_path: str | Path | None = None,
    hit_ratio: float = 1.0,
    warmup_steps: int = 200,
    warmup_lr: float | None = None,
) -> TrainResult:
    """Full pretraining run; returns the per-step loss history.

    The loss log (when ``log_path`` is given) is JSONL with one record per
    step: {"step", "L_EX", "L_MNeM", "L_MMeM", "total"}.
    """
    started = time.perf_counter()
    entities = linked_entities(documents, kg)
    neighbors = neighbor_cache(kg, freq, entities, config.k, alpha=config.alpha)

    warmup_token_predictor(
        model,
        _document_batches(documents, batch_size, seed + 1),
        kg,
        freq,
        vocab,
        config,
        steps=warmup_steps,
        lr=warmup_lr if warmup_lr is not None else lr,
        seed=seed + 17,
    )
    mmem_target = MmemTarget.from_model(model)

    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    batches = _document_batches(documents, batch_size, seed)
    history: list[dict] = []
    for step in range(1, steps + 1):
        batch = build_pretrain_batch(
            next(batches),
            kg,
            freq,
            vocab,
            config,
            seed=seed + _BATCH_STRIDE * step,
            neighbors=neighbors,
            hit_ratio=hit_ratio,
        )
        parts = compute_losses(
            model,
            batch,
            kg_t,
            sampler,
            config,
            seed=seed + _NEGATIVE_STRIDE * step,
            mmem_target=mmem_target,
        )
        optimizer.zero_grad()
        parts.total.backward()
        optimizer.step()
        history.append({"step": step, **parts.floats()})

    wall = time.perf_counter() - started
    if log_path is not None:
        write_loss_log(history, log_path)
    return TrainResult(history=history, mmem_target=mmem_target, wall_clock_s=wall)


def write_loss_log(history: Sequence[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in history:
            fh.write(json.dumps(record) + "\n")


def read_loss_log(path: str | Path) -> list[dict]:
    return [
        json.loads(line)
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
