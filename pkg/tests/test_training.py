"""Training orchestration: reproducibility, loss logging, run manifests,
and the warmup snapshot."""

import hashlib
import json

import numpy as np
import torch

from conftest import TINY_TRIPLES, TINY_TYPES, small_config
from kgfuse.kg import count_mention_frequencies, load_kg
from kgfuse.model.knowledge_model import KnowledgeModel
from kgfuse.objectives import kg_tensors
from kgfuse.sampling import NegativeSampler
from kgfuse.tokenizer import Vocab
from kgfuse.training import (
    RunManifest,
    linked_entities,
    read_loss_log,
    train,
    write_loss_log,
)
from kgfuse.transr import init_embeddings

DOCS = [
    "aspirin treats headache and also treats fever quite well",
    "flu causes fever and flu causes headache in most patients",
    "ibuprofen treats headache better than aspirin some say",
    "patients with fever took aspirin and ibuprofen today",
    "aspirin or ibuprofen for headache with fever from flu",
    "the flu season brings fever and headache to many",
]


def make_world():
    kg = load_kg(TINY_TRIPLES, TINY_TYPES)
    vocab = Vocab.from_texts(DOCS)
    config = small_config(vocab_size=len(vocab))
    freq = count_mention_frequencies(DOCS, kg)
    emb = init_embeddings(kg.num_entities, kg.num_relations, config.d2, seed=3)
    sampler = NegativeSampler(kg, freq, smoothing=1.0)
    return kg, vocab, config, freq, emb, sampler


def run_training(steps=3, seed=42, warmup_steps=2, **kwargs):
    kg, vocab, config, freq, emb, sampler = make_world()
    model = KnowledgeModel(config, emb.entity, kg.entity_types)
    kg_t = kg_tensors(emb)
    result = train(
        model,
        DOCS,
        kg,
        freq,
        vocab,
        kg_t,
        sampler,
        config,
        steps=steps,
        batch_size=2,
        seed=seed,
        warmup_steps=warmup_steps,
        **kwargs,
    )
    return model, result


class TestLinkedEntities:
    def test_mentioned_entities_ascending(self):
        kg = load_kg(TINY_TRIPLES, TINY_TYPES)
        found = linked_entities(DOCS, kg)
        assert found == sorted(found)
        assert set(found) == set(range(kg.num_entities))

    def test_unmentioned_entities_absent(self):
        kg = load_kg(TINY_TRIPLES, TINY_TYPES)
        found = linked_entities(["nothing relevant here at all"], kg)
        assert found == []


class TestReproducibility:
    def test_same_seed_bit_exact_history(self):
        _, first = run_training(seed=7)
        _, second = run_training(seed=7)
        assert first.history == second.history

    def test_different_seed_differs(self):
        _, first = run_training(seed=7)
        _, second = run_training(seed=8)
        assert first.history != second.history

    def test_history_record_keys(self):
        _, result = run_training()
        for step, record in enumerate(result.history, start=1):
            assert set(record) == {"step", "L_EX", "L_MNeM", "L_MMeM", "total"}
            assert record["step"] == step
            for key in ("L_EX", "L_MNeM", "L_MMeM", "total"):
                assert isinstance(record[key], float)

    def test_total_combines_parts(self):
        _, result = run_training()
        config = small_config()
        for record in result.history:
            expected = (
                record["L_EX"]
                + config.lambda1 * record["L_MNeM"]
                + config.lambda2 * record["L_MMeM"]
            )
            assert record["total"] == expected


class TestAblationPath:
    def test_zero_hit_ratio_kills_neighbor_loss(self):
        _, result = run_training(hit_ratio=0.0)
        for record in result.history:
            assert record["L_MNeM"] == 0.0

    def test_full_hit_ratio_engages_neighbor_loss(self):
        _, result = run_training(hit_ratio=1.0)
        assert any(record["L_MNeM"] != 0.0 for record in result.history)


class TestWarmupSnapshot:
    def test_no_warmup_snapshots_initial_table(self):
        kg, vocab, config, freq, emb, sampler = make_world()
        model = KnowledgeModel(config, emb.entity, kg.entity_types)
        initial = model.input_embedding_table().detach().clone()
        result = train(
            model, DOCS, kg, freq, vocab, kg_tensors(emb), sampler, config,
            steps=1, batch_size=2, seed=0, warmup_steps=0,
        )
        assert torch.equal(result.mmem_target.table, initial)

    def test_warmup_moves_the_snapshot(self):
        kg, vocab, config, freq, emb, sampler = make_world()
        model = KnowledgeModel(config, emb.entity, kg.entity_types)
        initial = model.input_embedding_table().detach().clone()
        result = train(
            model, DOCS, kg, freq, vocab, kg_tensors(emb), sampler, config,
            steps=1, batch_size=2, seed=0, warmup_steps=3,
        )
        assert not torch.equal(result.mmem_target.table, initial)

    def test_snapshot_frozen_during_main_loop(self):
        model, result = run_training(steps=3)
        # training moved the live table; the snapshot must not follow it
        live = model.input_embedding_table().detach()
        assert not torch.equal(result.mmem_target.table, live)
        assert not result.mmem_target.table.requires_grad


class TestLossLog:
    def test_write_read_round_trip(self, tmp_path):
        _, result = run_training()
        path = tmp_path / "losses.jsonl"
        write_loss_log(result.history, path)
        assert read_loss_log(path) == result.history

    def test_log_path_argument_writes(self, tmp_path):
        path = tmp_path / "losses.jsonl"
        _, result = run_training(log_path=path)
        assert path.exists()
        assert read_loss_log(path) == result.history

    def test_log_is_one_json_object_per_line(self, tmp_path):
        path = tmp_path / "losses.jsonl"
        run_training(steps=2, log_path=path)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        for line in lines:
            record = json.loads(line)
            assert set(record) == {"step", "L_EX", "L_MNeM", "L_MMeM", "total"}


class TestRunManifest:
    def test_input_digest_matches_sha256(self, tmp_path):
        payload = b"some bytes worth hashing"
        source = tmp_path / "input.tsv"
        source.write_bytes(payload)
        manifest = RunManifest(config={"d1": 8}, seed=1)
        manifest.add_input("triples", source)
        assert (
            manifest.inputs["triples"]["sha256"]
            == hashlib.sha256(payload).hexdigest()
        )

    def test_save_load_round_trip(self, tmp_path):
        source = tmp_path / "input.tsv"
        source.write_text("a\tb\tc\n")
        manifest = RunManifest(config={"d1": 8, "seed": 4}, seed=4)
        manifest.add_input("triples", source)
        manifest.outputs["model"] = "model/"
        manifest.wall_clock_s = 1.25
        manifest.loss_log = "losses.jsonl"
        path = tmp_path / "run.json"
        manifest.save(path)
        loaded = RunManifest.load(path)
        assert loaded == manifest
