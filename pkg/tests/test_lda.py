"""Topic-model vocabulary pruning, Gibbs sampling invariants, inference."""

from __future__ import annotations

import numpy as np
import pytest

import oracles
from capsieve import (
    Comment,
    ConfigurationError,
    Corpus,
    GibbsCheckpoint,
    ImageEntry,
    LdaDocument,
    LdaVocabulary,
    MismatchError,
    NGram,
    TaggedToken,
    assemble_documents,
    build_lda_vocab,
    build_vocabulary,
    default_alpha,
    infer_topics,
    perplexity,
    top_terms,
    train_lda,
)
from capsieve.lda import _stream_uniforms, recount_assignments
from capsieve.synthetic import planted_phi, sample_docs


def _vocab(n_terms):
    return LdaVocabulary(
        tuple(NGram((f"t{i:03d}",), ("NOUN",)) for i in range(n_terms))
    )


def _docs(term_lists):
    return [LdaDocument(f"d{i:03d}", tuple(ids)) for i, ids in enumerate(term_lists)]


@pytest.fixture(scope="module")
def small_model():
    rng = np.random.default_rng(7)
    docs = _docs(rng.integers(0, 12, size=9).reshape(3, 3).tolist()
                 + [rng.integers(0, 12, size=15).tolist()])
    return train_lda(docs, _vocab(12), k=3, alpha=0.5, beta=0.01,
                     iters=30, burn_in=10, seed=1)


class TestDefaultAlpha:
    def test_fifty_over_k(self):
        assert default_alpha(200) == 0.25
        assert default_alpha(5) == 10.0


class TestBuildLdaVocab:
    def _corpus_vocab(self):
        # water in 3 of 4 comments (75% >= cap 0.5 -> dropped); sky in 1
        comments = [
            [("water", "NOUN")],
            [("water", "NOUN")],
            [("water", "NOUN")],
            [("sky", "NOUN"), ("blue", "ADJ"), ("tone", "NOUN")],
        ]
        images = [
            ImageEntry(
                f"im{i}",
                (Comment("c0", "x", tuple(TaggedToken(s, t) for s, t in pairs)),),
            )
            for i, pairs in enumerate(comments)
        ]
        return build_vocabulary(Corpus.from_images(images))

    def test_doc_freq_cap_is_strict(self):
        vocab = self._corpus_vocab()
        lda_vocab = build_lda_vocab(vocab, total_comments=4, doc_freq_cap=0.5)
        kept = {g.terms for g in lda_vocab.terms}
        assert ("water",) not in kept
        assert ("sky",) in kept
        # at exactly the cap the term is dropped (strict <)
        lda_vocab = build_lda_vocab(vocab, total_comments=4, doc_freq_cap=0.75)
        assert ("water",) not in {g.terms for g in lda_vocab.terms}
        lda_vocab = build_lda_vocab(vocab, total_comments=4, doc_freq_cap=0.76)
        assert ("water",) in {g.terms for g in lda_vocab.terms}

    def test_rank_order_and_ties(self):
        vocab = self._corpus_vocab()
        lda_vocab = build_lda_vocab(vocab, total_comments=4, doc_freq_cap=1.0)
        # water (freq 3) first; the freq-1 survivors follow lexicographically
        assert [g.terms for g in lda_vocab.terms] == [
            ("water",),
            ("blue", "tone"),
            ("sky",),
            ("sky", "blue"),
            ("tone",),
        ]

    def test_max_terms_cap(self):
        vocab = self._corpus_vocab()
        lda_vocab = build_lda_vocab(
            vocab, total_comments=4, doc_freq_cap=1.0, max_terms=2
        )
        assert [g.terms for g in lda_vocab.terms] == [("water",), ("blue", "tone")]

    def test_everything_capped_fails(self):
        vocab = self._corpus_vocab()
        with pytest.raises(ConfigurationError):
            build_lda_vocab(vocab, total_comments=4, doc_freq_cap=0.01)

    def test_bad_params(self):
        vocab = self._corpus_vocab()
        with pytest.raises(ConfigurationError):
            build_lda_vocab(vocab, total_comments=0)
        with pytest.raises(ConfigurationError):
            build_lda_vocab(vocab, total_comments=4, doc_freq_cap=1.5)
        with pytest.raises(ConfigurationError):
            build_lda_vocab(vocab, total_comments=4, max_terms=0)

    def test_vocab_hash_sensitivity(self):
        a = _vocab(5)
        b = LdaVocabulary(a.terms[:4] + (NGram(("zz",), ("NOUN",)),))
        assert a.vocab_hash() != b.vocab_hash()
        assert a.vocab_hash() == _vocab(5).vocab_hash()


class TestAssembleDocuments:
    def test_pools_comments_and_drops_oov(self):
        lda_vocab = LdaVocabulary(
            (NGram(("sky",), ("NOUN",)), NGram(("tone",), ("NOUN",)))
        )
        images = [
            ImageEntry("im0", (
                Comment("c0", "x", (TaggedToken("sky", "NOUN"),)),
                Comment("c1", "x", (TaggedToken("tone", "NOUN"),
                                    TaggedToken("oov", "VERB"))),
            )),
            ImageEntry("im1", (
                Comment("c0", "x", (TaggedToken("unseen", "NOUN"),)),
            )),
        ]
        docs = assemble_documents(Corpus.from_images(images), lda_vocab)
        assert docs[0] == LdaDocument("im0", (0, 1))
        # image with only out-of-vocabulary grams stays, as an empty doc
        assert docs[1] == LdaDocument("im1", ())


class TestTrainValidation:
    def test_bad_hyperparameters(self):
        docs = _docs([[0, 1], [1, 2]])
        vocab = _vocab(3)
        with pytest.raises(ConfigurationError):
            train_lda(docs, vocab, k=1, iters=10, burn_in=5)
        with pytest.raises(ConfigurationError):
            train_lda(docs, vocab, k=3, iters=5, burn_in=5)
        with pytest.raises(ConfigurationError):
            train_lda(docs, vocab, k=3, iters=10, burn_in=-1)
        with pytest.raises(ConfigurationError):
            train_lda(docs, vocab, k=3, iters=10, burn_in=5, beta=0.0)
        with pytest.raises(ConfigurationError):
            train_lda(docs, vocab, k=3, iters=10, burn_in=5, alpha=-0.1)
        with pytest.raises(ConfigurationError):
            train_lda(docs, vocab, k=3, iters=10, burn_in=5, checkpoint_every=0)
        with pytest.raises(ConfigurationError):
            train_lda([], vocab, k=3, iters=10, burn_in=5)

    def test_term_id_overflow_is_mismatch(self):
        with pytest.raises(MismatchError):
            train_lda(_docs([[0, 7]]), _vocab(3), k=2, iters=4, burn_in=1)

    def test_all_empty_docs_fail(self):
        with pytest.raises(ConfigurationError):
            train_lda(_docs([[], []]), _vocab(3), k=2, iters=4, burn_in=1)


class TestTrainedModel:
    def test_count_state_matches_recount(self, small_model):
        m = small_model
        n_kw, n_dk, n_k = recount_assignments(
            m.term_ids, m.doc_offsets, m.z, m.k, m.vocab.size
        )
        assert np.array_equal(m.n_kw, n_kw)
        assert np.array_equal(m.n_dk, n_dk)
        assert np.array_equal(m.n_k, n_k)
        # and against the plain-python oracle
        ref_kw, ref_dk, ref_k = oracles.ref_lda_counts(
            m.term_ids.tolist(), m.doc_offsets.tolist(), m.z.tolist(),
            m.k, m.vocab.size,
        )
        assert m.n_kw.tolist() == ref_kw
        assert m.n_dk.tolist() == ref_dk
        assert m.n_k.tolist() == ref_k

    def test_point_estimates_match_oracle(self, small_model):
        m = small_model
        assert np.allclose(
            m.phi, np.array(oracles.ref_phi(m.n_kw.tolist(), m.n_k.tolist(), m.beta)),
            atol=1e-12,
        )
        assert np.allclose(
            m.theta, np.array(oracles.ref_theta(m.n_dk.tolist(), m.alpha)),
            atol=1e-12,
        )

    def test_rows_normalized(self, small_model):
        assert np.allclose(small_model.phi.sum(axis=1), 1.0, atol=1e-9)
        assert np.allclose(small_model.theta.sum(axis=1), 1.0, atol=1e-9)

    def test_mass_conservation(self, small_model):
        m = small_model
        total = int(m.doc_offsets[-1])
        assert int(m.n_k.sum()) == total
        assert np.array_equal(m.n_kw.sum(axis=1), m.n_k)
        assert np.array_equal(m.n_dk.sum(axis=1), np.diff(m.doc_offsets))

    def test_same_seed_bit_determinism(self):
        rng = np.random.default_rng(3)
        docs = _docs(rng.integers(0, 10, size=(6, 8)).tolist())
        kwargs = dict(k=4, alpha=0.3, beta=0.05, iters=25, burn_in=5, seed=42)
        a = train_lda(docs, _vocab(10), **kwargs)
        b = train_lda(docs, _vocab(10), **kwargs)
        assert np.array_equal(a.z, b.z)
        assert np.array_equal(a.n_kw, b.n_kw)
        assert a.phi.tobytes() == b.phi.tobytes()
        assert a.theta.tobytes() == b.theta.tobytes()
        c = train_lda(docs, _vocab(10), **{**kwargs, "seed": 43})
        assert not np.array_equal(a.z, c.z)

    def test_empty_doc_gets_uniform_theta(self):
        docs = _docs([[0, 1, 2], [], [2, 2]])
        model = train_lda(docs, _vocab(3), k=2, alpha=0.4, iters=6, burn_in=2, seed=0)
        assert np.allclose(model.theta[1], 0.5)
        assert model.image_ids[1] == "d001"

    def test_average_samples_runs_and_normalizes(self):
        docs = _docs([[0, 1, 2, 0], [2, 3, 3]])
        model = train_lda(
            docs, _vocab(4), k=2, alpha=0.4, iters=12, burn_in=4, seed=0,
            average_samples=True,
        )
        assert model.average_samples
        assert np.allclose(model.phi.sum(axis=1), 1.0, atol=1e-9)
        assert np.allclose(model.theta.sum(axis=1), 1.0, atol=1e-9)

    def test_checkpoints_fire_and_are_consistent(self):
        seen: list[GibbsCheckpoint] = []
        docs = _docs([[0, 1, 2, 3], [1, 1, 0], [3, 2]])
        model = train_lda(
            docs, _vocab(4), k=3, alpha=0.4, iters=12, burn_in=4, seed=9,
            checkpoint_every=4, on_checkpoint=seen.append,
        )
        assert [cp.sweep for cp in seen] == [4, 8, 12]
        for cp in seen:
            kw, dk, k_ = recount_assignments(
                model.term_ids, model.doc_offsets, cp.z, model.k, model.vocab.size
            )
            assert np.array_equal(cp.n_kw, kw)
            assert np.array_equal(cp.n_dk, dk)
            assert np.array_equal(cp.n_k, k_)
        # snapshots are copies: the final state lives in the model arrays
        assert np.array_equal(seen[-1].z, model.z)
        seen[0].z[:] = -1
        assert not np.array_equal(seen[0].z, model.z)


class TestInferTopics:
    def test_empty_doc_uniform(self, small_model):
        theta = infer_topics(small_model, LdaDocument("x", ()))
        assert np.allclose(theta, 1.0 / small_model.k)

    def test_deterministic(self, small_model):
        doc = LdaDocument("x", (0, 3, 3, 7))
        a = infer_topics(small_model, doc, iters=20, seed=4)
        b = infer_topics(small_model, doc, iters=20, seed=4)
        assert a.tobytes() == b.tobytes()

    def test_normalized(self, small_model):
        doc = LdaDocument("x", (1, 2, 5, 5, 11))
        theta = infer_topics(small_model, doc, iters=10, seed=0)
        assert theta.sum() == pytest.approx(1.0, abs=1e-9)
        assert (theta > 0).all()

    def test_term_overflow_rejected(self, small_model):
        with pytest.raises(MismatchError):
            infer_topics(small_model, LdaDocument("x", (99,)))

    def test_bad_iters(self, small_model):
        with pytest.raises(ConfigurationError):
            infer_topics(small_model, LdaDocument("x", (0,)), iters=0)

    def test_model_counts_untouched(self, small_model):
        before = small_model.n_kw.copy()
        infer_topics(small_model, LdaDocument("x", (0, 1, 2)), iters=15, seed=2)
        assert np.array_equal(small_model.n_kw, before)


class TestTopTerms:
    def test_ranked_by_phi_with_lexicographic_ties(self):
        docs = _docs([[0, 0, 0, 1], [2, 2, 1]])
        model = train_lda(docs, _vocab(3), k=2, alpha=0.4, iters=8, burn_in=2, seed=0)
        for topic in range(model.k):
            ranked = top_terms(model, topic, 3)
            probs = [p for _, p in ranked]
            assert probs == sorted(probs, reverse=True)
            for (g1, p1), (g2, p2) in zip(ranked, ranked[1:]):
                if p1 == p2:
                    assert g1.terms < g2.terms

    def test_bounds(self, small_model):
        assert len(top_terms(small_model, 0, 5)) == 5
        assert top_terms(small_model, 0, 0) == []
        with pytest.raises(ConfigurationError):
            top_terms(small_model, small_model.k, 3)
        with pytest.raises(ConfigurationError):
            top_terms(small_model, 0, -1)


class TestPerplexity:
    def test_matches_manual_aggregation(self, small_model):
        heldout = _docs([[0, 1, 2], [5, 5, 9, 11]])
        value = perplexity(small_model, heldout, iters=10, seed=3)
        log_lik = 0.0
        total = 0
        for doc in heldout:
            theta = infer_topics(small_model, doc, iters=10, seed=3)
            for w in doc.term_ids:
                log_lik += float(np.log(theta @ small_model.phi[:, w]))
                total += 1
        assert value == pytest.approx(float(np.exp(-log_lik / total)), rel=1e-12)

    def test_empty_heldout_rejected(self, small_model):
        with pytest.raises(ConfigurationError):
            perplexity(small_model, _docs([[]]))

    def test_uniform_model_scores_vocab_size(self):
        # all words equally likely in every topic -> perplexity ~= vocab size
        docs = _docs([list(range(12)) * 2, list(range(12))])
        model = train_lda(docs, _vocab(12), k=2, alpha=100.0, beta=1e6,
                          iters=4, burn_in=1, seed=0)
        value = perplexity(model, _docs([[0, 5, 11]]), iters=5, seed=0)
        assert value == pytest.approx(12.0, rel=1e-3)


class TestPhiloxStreams:
    def test_reproducible(self):
        a = _stream_uniforms(7, 0, 3, 2, 5)
        b = _stream_uniforms(7, 0, 3, 2, 5)
        assert a.tobytes() == b.tobytes()

    def test_distinct_across_axes(self):
        base = _stream_uniforms(7, 0, 3, 2, 5)
        assert not np.array_equal(base, _stream_uniforms(8, 0, 3, 2, 5))
        assert not np.array_equal(base, _stream_uniforms(7, 1, 3, 2, 5))
        assert not np.array_equal(base, _stream_uniforms(7, 0, 4, 2, 5))
        assert not np.array_equal(base, _stream_uniforms(7, 0, 3, 3, 5))

    def test_huge_seed_wraps(self):
        a = _stream_uniforms(2**64 + 5, 0, 0, 0, 4)
        b = _stream_uniforms(5, 0, 0, 0, 4)
        assert a.tobytes() == b.tobytes()


class TestPlantedRecoverySmoke:
    def test_small_planted_structure_recovers(self):
        # tiny version of the acceptance run: 3 topics, disjoint supports
        phi_true = planted_phi(n_topics=3, vocab_size=30, support=10)
        docs, _ = sample_docs(phi_true, n_docs=120, doc_len=30, alpha=0.1, seed=5)
        model = train_lda(docs, _vocab(30), k=3, alpha=0.1, beta=0.01,
                          iters=150, burn_in=75, seed=2)
        from capsieve.synthetic import match_topics

        _, mean_cos = match_topics(phi_true, model.phi)
        assert mean_cos >= 0.85
