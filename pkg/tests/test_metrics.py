"""Caption overlap metrics and diversity protocol behavior."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from capsieve import (
    CaptionSet,
    ConfigurationError,
    MismatchError,
    bleu,
    cider,
    cider_per_image,
    distinct_caption_ratio,
    diversity_report,
    positional_unique_ngrams,
    rouge_l,
    rouge_l_per_image,
    sentence_bleu,
)
from helpers import caption_fixture


def _set(cands, refs):
    return CaptionSet(cands, refs)


class TestCaptionSet:
    def test_lowercases_tokens(self):
        cs = _set({"im": ("The", "CAT")}, {"im": (("THE", "cat"),)})
        assert cs.candidates["im"] == ("the", "cat")
        assert cs.references["im"][0] == ("the", "cat")

    def test_candidate_without_references_rejected(self):
        with pytest.raises(MismatchError):
            _set({"im": ("a",)}, {})
        with pytest.raises(MismatchError):
            _set({"im": ("a",)}, {"im": ()})

    def test_empty_reference_caption_rejected(self):
        with pytest.raises(MismatchError):
            _set({"im": ("a",)}, {"im": (("a",), ())})

    def test_reference_only_images_allowed(self):
        cs = _set({"im1": ("a",)}, {"im1": (("a",),), "im2": (("b",),)})
        assert cs.image_ids == ("im1",)
        assert cs.n_images == 1

    def test_empty_candidate_caption_allowed(self):
        cs = _set({"im": ()}, {"im": (("a",),)})
        assert cs.candidates["im"] == ()

    def test_image_ids_sorted(self):
        cs = _set(
            {"b": ("x",), "a": ("y",)}, {"b": (("x",),), "a": (("y",),)}
        )
        assert cs.image_ids == ("a", "b")


class TestBleu:
    def test_hand_case_exact_prefix_match(self):
        cs = _set(
            {"im": ("the", "cat", "sat")},
            {"im": (("the", "cat", "sat", "down"), ("a", "cat", "sat"))},
        )
        scores = bleu(cs)
        # closest reference has length 3, so no brevity penalty; every
        # order up to 3 matches fully; no 4-grams exist so BLEU-4 is 0
        assert scores == (1.0, 1.0, 1.0, 0.0)

    def test_clipping(self):
        cs = _set({"im": ("the", "the", "the")}, {"im": (("the", "cat"),)})
        scores = bleu(cs)
        assert scores[0] == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert scores[1:] == (0.0, 0.0, 0.0)

    def test_brevity_penalty_ties_to_shorter_reference(self):
        # reference lengths 2 and 4 are both one token away from the
        # candidate; the shorter wins, so no penalty applies
        cs = _set(
            {"im": ("a", "b", "c")}, {"im": (("a", "b", "c", "d"), ("a", "b"))}
        )
        assert bleu(cs)[0] == 1.0

    def test_brevity_penalty_value(self):
        cs = _set({"im": ("a", "b")}, {"im": (("a", "b", "c", "d"),)})
        scores = bleu(cs)
        assert scores[0] == pytest.approx(math.exp(-1.0), abs=1e-12)
        assert scores[1] == pytest.approx(math.exp(-1.0), abs=1e-12)
        assert scores[2] == 0.0

    def test_pools_counts_before_dividing(self):
        cs = _set(
            {"a": ("x",), "b": ("y", "z")},
            {"a": (("x",),), "b": (("q", "r"),)},
        )
        # pooled unigram precision is 1/3; a mean of per-image BLEU
        # would give 1/2 instead
        assert bleu(cs)[0] == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_all_empty_candidates(self):
        cs = _set({"im": ()}, {"im": (("a",),)})
        assert bleu(cs) == (0.0, 0.0, 0.0, 0.0)

    def test_empty_set_rejected(self):
        with pytest.raises(ConfigurationError):
            bleu(_set({}, {}))

    def test_sentence_bleu_is_one_image_corpus(self):
        cand = ("a", "b", "c")
        refs = (("a", "b", "c"), ("a", "x"))
        assert sentence_bleu(cand, refs) == bleu(_set({"i": cand}, {"i": refs}))

    def test_matches_oracle_on_fixture(self):
        import random

        rng = random.Random(11)
        cands, refs = caption_fixture(rng)
        got = bleu(_set(cands, refs))
        want = oracles.ref_bleu(cands, refs)
        for g, w in zip(got, want):
            assert g == pytest.approx(w, abs=1e-12)


class TestRougeL:
    def test_hand_case(self):
        cs = _set(
            {"im": ("the", "cat", "sat")}, {"im": (("the", "dog", "sat"),)}
        )
        # LCS = 2, precision = recall = 2/3, so F equals 2/3
        assert rouge_l(cs) == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_best_reference_wins(self):
        cs = _set(
            {"im": ("the", "cat", "sat")},
            {"im": (("the", "dog", "sat"), ("the", "cat", "sat"))},
        )
        assert rouge_l_per_image(cs)["im"] == 1.0

    def test_empty_candidate_scores_zero(self):
        cs = _set({"im": ()}, {"im": (("a", "b"),)})
        assert rouge_l_per_image(cs)["im"] == 0.0

    def test_mean_over_images(self):
        cs = _set(
            {"a": ("x", "y"), "b": ("p",)},
            {"a": (("x", "y"),), "b": (("q",),)},
        )
        per = rouge_l_per_image(cs)
        assert per["a"] == 1.0
        assert per["b"] == 0.0
        assert rouge_l(cs) == 0.5

    def test_empty_set_rejected(self):
        with pytest.raises(ConfigurationError):
            rouge_l(_set({}, {}))

    def test_matches_oracle_on_fixture(self):
        import random

        rng = random.Random(12)
        cands, refs = caption_fixture(rng)
        per, mean = oracles.ref_rouge_l(cands, refs)
        got = rouge_l_per_image(_set(cands, refs))
        for iid, want in per.items():
            assert got[iid] == pytest.approx(want, abs=1e-12)
        assert rouge_l(_set(cands, refs)) == pytest.approx(mean, abs=1e-12)


class TestCider:
    def test_needs_two_images(self):
        with pytest.raises(ConfigurationError):
            cider_per_image(_set({"im": ("a",)}, {"im": (("a",),)}))

    def test_perfect_match_scores_ten(self):
        cs = _set(
            {"im1": ("a", "b", "c", "d"), "im2": ("e", "f", "g", "h")},
            {"im1": (("a", "b", "c", "d"),), "im2": (("e", "f", "g", "h"),)},
        )
        per = cider_per_image(cs)
        assert per["im1"] == pytest.approx(10.0, abs=1e-9)
        assert per["im2"] == pytest.approx(10.0, abs=1e-9)
        assert cider(cs) == pytest.approx(10.0, abs=1e-9)

    def test_hand_case(self):
        cs = _set(
            {"im1": ("red", "car"), "im2": ("green", "tree")},
            {
                "im1": (("red", "car"), ("blue", "car")),
                "im2": (("green", "tree"),),
            },
        )
        per = cider_per_image(cs)
        # im1: unigram cosines (1, 1/2) average 3/4; bigram (1, 0)
        # average 1/2; no 3- or 4-grams
        assert per["im1"] == pytest.approx(10 * (0.75 + 0.5) / 4, abs=1e-12)
        assert per["im2"] == pytest.approx(10 * (1.0 + 1.0) / 4, abs=1e-12)
        assert cider(cs) == pytest.approx(4.0625, abs=1e-12)

    def test_never_seen_ngram_gets_max_idf(self):
        # candidate words absent from every reference still produce a
        # nonzero-norm vector, so the cosine is well defined (0 here)
        cs = _set(
            {"im1": ("zz", "qq"), "im2": ("e", "f")},
            {"im1": (("a", "b"),), "im2": (("e", "f"),)},
        )
        per = cider_per_image(cs)
        assert per["im1"] == 0.0
        assert per["im2"] > 0.0

    def test_length_penalty_damps_mismatched_lengths(self):
        cs_data = (
            {"im1": ("a", "b"), "im2": ("e", "f", "g")},
            {"im1": (("a", "b", "c", "d", "x", "y"),), "im2": (("e", "f", "g"),)},
        )
        plain = cider_per_image(_set(*cs_data))
        damped = cider_per_image(_set(*cs_data), length_penalty=True)
        assert damped["im1"] < plain["im1"]
        # equal lengths: penalty factor is exp(0) = 1
        assert damped["im2"] == pytest.approx(plain["im2"], abs=1e-12)

    def test_sigma_controls_damping(self):
        cs = _set(
            {"im1": ("a", "b"), "im2": ("e", "f")},
            {"im1": (("a", "b", "c", "d", "x", "y"),), "im2": (("e", "f"),)},
        )
        wide = cider_per_image(cs, length_penalty=True, sigma=100.0)
        narrow = cider_per_image(cs, length_penalty=True, sigma=1.0)
        assert narrow["im1"] < wide["im1"]

    def test_matches_oracle_on_fixture(self):
        import random

        rng = random.Random(13)
        cands, refs = caption_fixture(rng)
        for lp in (False, True):
            want = oracles.ref_cider(cands, refs, length_penalty=lp)
            got = cider_per_image(_set(cands, refs), length_penalty=lp)
            for iid, w in want[0].items():
                assert got[iid] == pytest.approx(w, abs=1e-12)
            assert cider(_set(cands, refs), length_penalty=lp) == pytest.approx(
                want[1], abs=1e-12
            )


class TestPositionalUniqueNgrams:
    def test_hand_case_unigrams(self):
        caps = [("a", "b", "c"), ("a", "x", "c"), ("a",)]
        assert positional_unique_ngrams(caps, 1, max_pos=4) == [1, 2, 1, 0]

    def test_hand_case_bigrams(self):
        caps = [("a", "b", "c"), ("a", "x", "c"), ("a",)]
        assert positional_unique_ngrams(caps, 2, max_pos=4) == [2, 2, 0, 0]

    def test_identical_captions_flat_one(self):
        caps = [("w",) * 6] * 4
        assert positional_unique_ngrams(caps, 1, max_pos=8) == [1] * 6 + [0] * 2
        assert positional_unique_ngrams(caps, 4, max_pos=8) == [1] * 3 + [0] * 5

    def test_short_captions_contribute_nothing(self):
        assert positional_unique_ngrams([("a",)], 2, max_pos=3) == [0, 0, 0]

    def test_empty_candidate_list(self):
        assert positional_unique_ngrams([], 1, max_pos=2) == [0, 0]

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            positional_unique_ngrams([("a",)], 0)
        with pytest.raises(ConfigurationError):
            positional_unique_ngrams([("a",)], 1, max_pos=0)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_oracle(self, seed):
        import random

        rng = random.Random(seed)
        from helpers import caption

        caps = [caption(rng) for _ in range(rng.randint(1, 8))]
        for n in (1, 2, 4):
            assert positional_unique_ngrams(caps, n, max_pos=10) == (
                oracles.ref_positional_unique(caps, n, 10)
            )


class TestDistinctCaptionRatio:
    def test_needs_two_captions(self):
        with pytest.raises(ConfigurationError):
            distinct_caption_ratio([("a",)])

    def test_bad_denominator(self):
        with pytest.raises(ConfigurationError):
            distinct_caption_ratio([("a",), ("b",)], denominator="avg")

    def test_all_distinct(self):
        caps = [("aa", "bb"), ("cc", "dd"), ("ee", "ff")]
        assert distinct_caption_ratio(caps) == 1.0

    def test_all_same(self):
        caps = [("a", "b")] * 5
        assert distinct_caption_ratio(caps) == 0.2

    def test_input_order_matters(self):
        a, b, c = ("a", "b"), ("b", "c"), ("c", "d")
        # b matches a's cluster; c matches neither a (its representative)
        assert distinct_caption_ratio([a, b, c], overlap_threshold=0.5) == 2 / 3
        # with b first, both a and c match it
        assert distinct_caption_ratio([b, a, c], overlap_threshold=0.5) == 1 / 3

    def test_empty_caption_pairs(self):
        # two empty captions count as the same caption
        assert distinct_caption_ratio([(), ()]) == 0.5
        # an empty and a non-empty caption never match
        assert distinct_caption_ratio([(), ("a",)]) == 1.0

    def test_min_denominator_is_stricter(self):
        long, short = ("a", "b", "c", "d"), ("a",)
        kw = dict(overlap_threshold=0.5)
        assert distinct_caption_ratio([long, short], denominator="max", **kw) == 1.0
        assert distinct_caption_ratio([long, short], denominator="min", **kw) == 0.5

    def test_repeated_words_collapse_to_sets(self):
        # word multiplicity is ignored by the common-word ratio
        assert (
            distinct_caption_ratio([("a", "a", "b"), ("a", "b", "b")],
                                   overlap_threshold=0.9)
            == 0.5
        )

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_oracle(self, seed):
        import random

        rng = random.Random(seed)
        from helpers import caption

        caps = [caption(rng) for _ in range(rng.randint(2, 10))]
        for thr in (0.03, 0.3, 0.8):
            for denom in ("max", "min"):
                assert distinct_caption_ratio(caps, thr, denom) == (
                    oracles.ref_distinct_ratio(caps, thr, denom)
                )


class TestDiversityReport:
    def test_shape_and_consistency(self):
        caps = [("a", "b", "c"), ("a", "x"), ("y", "b", "c", "d")]
        rep = diversity_report(caps, max_pos=5)
        assert set(rep.per_position) == {1, 2, 4}
        assert all(len(v) == 5 for v in rep.per_position.values())
        assert rep.per_position[2] == tuple(
            positional_unique_ngrams(caps, 2, max_pos=5)
        )
        assert rep.distinct_ratio == distinct_caption_ratio(caps)
        assert rep.n_captions == 3
        assert rep.max_pos == 5


class TestImageOrderInvariance:
    def test_metrics_ignore_mapping_insertion_order(self):
        import random

        rng = random.Random(14)
        cands, refs = caption_fixture(rng)
        ids = list(cands)
        rng.shuffle(ids)
        cands2 = {i: cands[i] for i in ids}
        refs2 = {i: refs[i] for i in ids}
        a, b = _set(cands, refs), _set(cands2, refs2)
        assert bleu(a) == bleu(b)
        assert rouge_l(a) == rouge_l(b)
        assert cider(a) == cider(b)
