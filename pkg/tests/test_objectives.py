"""Loss components: compatibility scoring, neighbor softmax, mention
regression, and the combined objective."""

import numpy as np
import pytest
import torch

from kgfuse.kg import FrequencyTable, load_kg
from kgfuse.objectives import (
    MnemContext,
    combine_losses,
    compatibility,
    compatibility_uncorrected,
    draw_mnem_negatives,
    kg_tensors,
    lex_loss,
    mmem_loss,
    mnem_loss,
)
from kgfuse.sampling import NegativeSampler
from kgfuse.transr import KgEmbeddings, init_embeddings


def random_kg_tensors(num_entities=8, num_relations=2, dim=6, seed=0):
    emb = init_embeddings(num_entities, num_relations, dim, seed=seed)
    return emb, kg_tensors(emb)


def make_sampler(num_entities=8):
    types = [f"e{i}\tt" for i in range(num_entities)]
    kg = load_kg([], types)
    counts = np.arange(1, num_entities + 1, dtype=np.int64)
    freq = FrequencyTable.from_counts(kg, counts, sample_count=100)
    return kg, NegativeSampler(kg, freq, smoothing=1.0)


class TestGramFactoring:
    def test_identity_on_random_vectors(self):
        """[h 1]·gram·[e 0]ᵀ must equal (h·M + r)·(e·M)ᵀ exactly."""
        rng = np.random.default_rng(0)
        for dim in (4, 8):
            emb, kg = random_kg_tensors(dim=dim, seed=dim)
            for r in range(kg.relation.shape[0]):
                h = torch.tensor(rng.standard_normal(dim))
                for e in range(kg.entity.shape[0]):
                    direct = (h @ kg.matrix[r] + kg.relation[r]) @ (
                        kg.entity[e] @ kg.matrix[r]
                    )
                    ext_h = torch.cat([h, torch.ones(1, dtype=torch.float64)])
                    ext_e = torch.cat(
                        [kg.entity[e], torch.zeros(1, dtype=torch.float64)]
                    )
                    factored = ext_h @ kg.gram[r] @ ext_e
                    assert float(factored) == pytest.approx(
                        float(direct), abs=1e-10
                    )

    def test_gram_is_symmetric_psd(self):
        _, kg = random_kg_tensors()
        for r in range(kg.gram.shape[0]):
            g = kg.gram[r]
            np.testing.assert_allclose(
                g.numpy(), g.T.numpy(), atol=1e-12
            )
            eigenvalues = np.linalg.eigvalsh(g.numpy())
            assert eigenvalues.min() > -1e-10


class TestCompatibility:
    def test_parallel_construction_scores_mu(self):
        """When the translated mention equals the projected entity exactly,
        the uncorrected compatibility is the scale factor itself."""
        emb, kg = random_kg_tensors()
        r, e = 0, 3
        target = kg.entity[e] @ kg.matrix[r]
        # solve h·M = target - r so that h·M + r == e·M
        h = torch.linalg.solve(
            kg.matrix[r].T, target - kg.relation[r]
        )
        score = compatibility_uncorrected(h, r, e, kg, mu=10.0)
        assert float(score) == pytest.approx(10.0, abs=1e-8)

    def test_uncorrected_is_scaled_cosine(self):
        emb, kg = random_kg_tensors()
        h = torch.tensor(np.random.default_rng(1).standard_normal(6))
        r, e = 1, 2
        left = (h @ kg.matrix[r] + kg.relation[r]).numpy()
        right = (kg.entity[e] @ kg.matrix[r]).numpy()
        cosine = left @ right / (np.linalg.norm(left) * np.linalg.norm(right))
        got = compatibility_uncorrected(h, r, e, kg, mu=7.0)
        assert float(got) == pytest.approx(7.0 * cosine, abs=1e-10)

    def test_corrected_expansion(self):
        """Direct formula: μ·(transformed/‖transformed‖)·(e/‖e‖) − μ·logQ."""
        _, kg = random_kg_tensors()
        _, sampler = make_sampler()
        rng = np.random.default_rng(2)
        h = torch.tensor(rng.standard_normal(6))
        r, e, mu = 1, 4, 10.0

        ext = np.concatenate([h.numpy(), [1.0]])
        transformed = ext @ kg.gram[r].numpy()
        entity = kg.entity[e].numpy()
        expected = (
            mu
            * (transformed[:-1] @ entity)
            / (np.linalg.norm(transformed) * np.linalg.norm(entity))
            - mu * np.log(sampler.q(e))
        )
        got = compatibility(h, r, e, kg, sampler, mu)
        assert float(got) == pytest.approx(expected, abs=1e-10)

    def test_normalization_sides_differ(self):
        """The mention side is normalized by the transformed-vector norm
        including its translation row; the entity side by the raw norm.
        A construction where the two conventions disagree must follow the
        first one."""
        _, kg = random_kg_tensors()
        _, sampler = make_sampler()
        h = torch.tensor(np.random.default_rng(3).standard_normal(6))
        r, e, mu = 0, 1, 10.0
        got = float(compatibility(h, r, e, kg, sampler, mu))

        # the wrong reading: cosine of the unfactored vectors
        left = (h @ kg.matrix[r] + kg.relation[r]).numpy()
        right = (kg.entity[e] @ kg.matrix[r]).numpy()
        wrong = (
            mu * left @ right / (np.linalg.norm(left) * np.linalg.norm(right))
            - mu * np.log(sampler.q(e))
        )
        assert got != pytest.approx(wrong, abs=1e-6)

    def test_guards(self):
        _, kg = random_kg_tensors()
        _, sampler = make_sampler()
        h = torch.zeros(6, dtype=torch.float64)
        with pytest.raises(ValueError, match="mu"):
            compatibility(h, 0, 0, kg, sampler, mu=0.0)


class TestMnemLoss:
    def test_no_negatives_means_zero(self):
        _, kg = random_kg_tensors()
        _, sampler = make_sampler()
        h = torch.tensor(np.random.default_rng(4).standard_normal(6))
        ctx = MnemContext(h_mf=h, neighbors=((0, 2),))
        loss = mnem_loss([ctx], kg, sampler, 10.0, [[[]]])
        assert float(loss) == 0.0

    def test_matches_manual_logsumexp(self):
        _, kg = random_kg_tensors()
        _, sampler = make_sampler()
        h = torch.tensor(np.random.default_rng(5).standard_normal(6))
        ctx = MnemContext(h_mf=h, neighbors=((0, 2), (1, 5)))
        negatives = [[[1, 3], [4]]]
        loss = mnem_loss([ctx], kg, sampler, 10.0, negatives)

        terms = []
        for (rel, ent), negs in zip(ctx.neighbors, negatives[0]):
            scores = [float(compatibility(h, rel, ent, kg, sampler, 10.0))]
            scores += [
                float(compatibility(h, rel, n, kg, sampler, 10.0)) for n in negs
            ]
            arr = np.array(scores)
            m = arr.max()
            terms.append(m + np.log(np.exp(arr - m).sum()) - arr[0])
        assert float(loss) == pytest.approx(np.mean(terms), abs=1e-10)

    def test_empty_contexts_zero(self):
        _, kg = random_kg_tensors()
        _, sampler = make_sampler()
        loss = mnem_loss([], kg, sampler, 10.0, [])
        assert float(loss) == 0.0
        assert loss.shape == ()

    def test_negative_draws_avoid_positive_and_respect_type(self):
        _, kg = random_kg_tensors()
        sample_kg, sampler = make_sampler()
        h = torch.zeros(6, dtype=torch.float64)
        contexts = [MnemContext(h_mf=h, neighbors=((0, 2), (0, 6)))]
        negs = draw_mnem_negatives(contexts, sampler, k_neg=5, seed=0)
        assert len(negs[0]) == 2
        assert all(len(d) == 5 for d in negs[0])
        assert 2 not in negs[0][0]
        assert 6 not in negs[0][1]

    def test_negative_draws_seeded(self):
        _, kg = random_kg_tensors()
        _, sampler = make_sampler()
        h = torch.zeros(6, dtype=torch.float64)
        contexts = [MnemContext(h_mf=h, neighbors=((0, 2),))]
        a = draw_mnem_negatives(contexts, sampler, k_neg=4, seed=9)
        b = draw_mnem_negatives(contexts, sampler, k_neg=4, seed=9)
        assert a == b


class TestMmemLoss:
    def test_hand_arithmetic(self):
        p = [torch.tensor([1.0, 2.0]), torch.tensor([0.0, 0.0])]
        t = [torch.tensor([0.0, 2.0]), torch.tensor([3.0, 4.0])]
        # squared norms: 1 and 25, summed then divided by batch size 4
        loss = mmem_loss(p, t, batch_size=4)
        assert float(loss) == pytest.approx(26 / 4)

    def test_empty_is_zero(self):
        assert float(mmem_loss([], [], batch_size=2)) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mmem_loss([torch.zeros(2)], [], batch_size=1)


class TestLexAndTotal:
    def test_lex_matches_manual_cross_entropy(self):
        torch.manual_seed(6)
        logits = torch.randn(2, 5, 7, dtype=torch.float64)
        labels = torch.full((2, 5), -1, dtype=torch.int64)
        labels[0, 1] = 3
        labels[1, 4] = 0
        sop_logits = torch.randn(2, 2, dtype=torch.float64)
        sop_labels = torch.tensor([0, 1])
        got = lex_loss(logits, labels, sop_logits, sop_labels)

        mlm = torch.nn.functional.cross_entropy(
            torch.stack([logits[0, 1], logits[1, 4]]),
            torch.tensor([3, 0]),
        )
        sop = torch.nn.functional.cross_entropy(sop_logits, sop_labels)
        assert float(got) == pytest.approx(float(mlm + sop), abs=1e-12)

    def test_no_masked_positions(self):
        logits = torch.randn(1, 4, 7, dtype=torch.float64)
        labels = torch.full((1, 4), -1, dtype=torch.int64)
        sop_logits = torch.zeros(1, 2, dtype=torch.float64)
        sop_labels = torch.tensor([0])
        got = lex_loss(logits, labels, sop_logits, sop_labels)
        assert float(got) == pytest.approx(float(np.log(2.0)))

    def test_combination_weights(self):
        l_ex = torch.tensor(1.0)
        l_mnem = torch.tensor(10.0)
        l_mmem = torch.tensor(100.0)
        total = combine_losses(l_ex, l_mnem, l_mmem, lambda1=2.0, lambda2=4.0)
        assert float(total) == pytest.approx(1.0 + 20.0 + 400.0)
