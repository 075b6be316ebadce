"""Encoder stack: embeddings, attention masking, pooling, and heads."""

import numpy as np
import pytest
import torch

from kgfuse.model.encoder import SelfAttention, TransformerEncoder
from kgfuse.model.heads import MentionPoolHead, MlmHead, SopHead
from kgfuse.model.pooling import SpanPooler

from conftest import small_config


def make_encoder(**overrides):
    config = small_config(**overrides)
    torch.manual_seed(0)
    return TransformerEncoder(config).to(torch.float64), config


def random_inputs(config, batch=2, length=None, seed=0):
    rng = np.random.default_rng(seed)
    n = config.max_len
    length = length or n
    ids = torch.from_numpy(
        rng.integers(5, config.vocab_size, size=(batch, n)).astype(np.int64)
    )
    segments = torch.zeros(batch, n, dtype=torch.int64)
    mask = torch.zeros(batch, n, dtype=torch.int64)
    mask[:, :length] = 1
    ids[:, length:] = 0
    return ids, segments, mask


class TestEncoder:
    def test_state_shapes(self):
        encoder, config = make_encoder()
        ids, segments, mask = random_inputs(config)
        state = encoder(ids, segments, mask)
        assert len(state.hidden) == config.layers + 1
        for h in state.hidden:
            assert h.shape == (2, config.max_len, config.d1)
        assert state.layer(0) is state.hidden[0]
        assert state.final is state.hidden[-1]

    def test_padding_cannot_leak_into_real_positions(self):
        """Changing pad-position token ids must not move real outputs."""
        encoder, config = make_encoder()
        ids, segments, mask = random_inputs(config, length=10)
        out_a = encoder(ids, segments, mask).final
        ids_b = ids.clone()
        ids_b[:, 10:] = 7  # arbitrary real token id in the pad zone
        out_b = encoder(ids_b, segments, mask).final
        np.testing.assert_allclose(
            out_a[:, :10].detach().numpy(),
            out_b[:, :10].detach().numpy(),
            atol=1e-12,
        )

    def test_segment_embedding_changes_output(self):
        encoder, config = make_encoder()
        ids, segments, mask = random_inputs(config, length=8)
        out_a = encoder(ids, segments, mask).final
        segments_b = segments.clone()
        segments_b[:, 4:8] = 1
        out_b = encoder(ids, segments_b, mask).final
        assert not torch.allclose(out_a[:, :8], out_b[:, :8])

    def test_length_and_vocab_guards(self):
        encoder, config = make_encoder()
        too_long = torch.zeros(1, config.max_len + 1, dtype=torch.int64)
        with pytest.raises(ValueError, match="max_len"):
            encoder.embed(too_long, torch.zeros_like(too_long))
        bad_ids = torch.full((1, 4), config.vocab_size, dtype=torch.int64)
        with pytest.raises(ValueError, match="vocabulary"):
            encoder.embed(bad_ids, torch.zeros_like(bad_ids))

    def test_attention_rejects_indivisible_heads(self):
        with pytest.raises(ValueError):
            SelfAttention(dim=10, heads=3)

    def test_gradcheck_attention(self):
        torch.manual_seed(1)
        attn = SelfAttention(dim=8, heads=2).to(torch.float64)
        x = torch.randn(1, 5, 8, dtype=torch.float64, requires_grad=True)
        mask = torch.ones(1, 5, dtype=torch.int64)
        assert torch.autograd.gradcheck(
            lambda inp: attn(inp, mask), (x,), eps=1e-6, atol=1e-8
        )


class TestSpanPooler:
    def test_weights_sum_to_one(self):
        torch.manual_seed(2)
        pooler = SpanPooler(16).to(torch.float64)
        states = torch.randn(7, 16, dtype=torch.float64)
        with torch.no_grad():
            weights = pooler.weights(states)
        assert float(weights.sum()) == pytest.approx(1.0, abs=1e-12)
        assert bool((weights > 0).all())

    def test_single_token_passes_through(self):
        torch.manual_seed(3)
        pooler = SpanPooler(8).to(torch.float64)
        state = torch.randn(1, 8, dtype=torch.float64)
        np.testing.assert_allclose(
            pooler(state).detach().numpy(), state[0].detach().numpy(), atol=1e-15
        )

    def test_output_in_convex_hull(self):
        """The pooled vector is a convex combination of the span rows."""
        torch.manual_seed(4)
        pooler = SpanPooler(4).to(torch.float64)
        states = torch.randn(5, 4, dtype=torch.float64)
        pooled = pooler(states).detach().numpy()
        lo = states.min(dim=0).values.detach().numpy()
        hi = states.max(dim=0).values.detach().numpy()
        assert (pooled >= lo - 1e-12).all()
        assert (pooled <= hi + 1e-12).all()

    def test_invalid_shapes(self):
        pooler = SpanPooler(4)
        with pytest.raises(ValueError):
            pooler.weights(torch.zeros(0, 4))
        with pytest.raises(ValueError):
            pooler.weights(torch.zeros(2, 3, 4))


class TestHeads:
    def test_mlm_logit_shape(self):
        head = MlmHead(16, 50).to(torch.float64)
        hidden = torch.randn(2, 6, 16, dtype=torch.float64)
        assert head(hidden).shape == (2, 6, 50)

    def test_sop_logit_shape(self):
        head = SopHead(16).to(torch.float64)
        cls = torch.randn(3, 16, dtype=torch.float64)
        assert head(cls).shape == (3, 2)

    def test_mention_head_maps_to_kg_space(self):
        head = MentionPoolHead(16, 8).to(torch.float64)
        span = torch.randn(4, 16, dtype=torch.float64)
        assert head(span).shape == (8,)

    def test_mention_head_gradcheck(self):
        torch.manual_seed(5)
        head = MentionPoolHead(8, 4).to(torch.float64)
        span = torch.randn(3, 8, dtype=torch.float64, requires_grad=True)
        assert torch.autograd.gradcheck(head, (span,), eps=1e-6, atol=1e-8)
