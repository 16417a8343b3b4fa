"""N-gram extraction patterns and the corpus probability model.

Only two n-gram shapes are admitted: noun unigrams, and adjacent
descriptor-object bigrams whose first token is a noun/adjective/adverb and
whose second is a noun/adjective.  Every admitted occurrence is counted
(duplicates included) and the pooled table assigns each n-gram the
probability

    P(w) = C_w / sum_i C_i

so probabilities over the whole unigram+bigram vocabulary sum to one.
"""

from __future__ import annotations

import hashlib
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .corpus_io import Corpus
from .errors import CorpusFormatError
from .textnorm import ADJ, ADV, NOUN, TaggedToken

log = logging.getLogger(__name__)

# Bigram admission: descriptor followed by object.
DESCRIPTOR_TAGS = frozenset({NOUN, ADJ, ADV})
OBJECT_TAGS = frozenset({NOUN, ADJ})


@dataclass(frozen=True)
class NGram:
    """A unigram or bigram together with the tag pattern that admitted it."""

    terms: tuple[str, ...]
    pattern: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.terms) not in (1, 2):
            raise ValueError(f"only unigrams and bigrams are supported: {self.terms!r}")
        if len(self.pattern) != len(self.terms):
            raise ValueError(
                f"pattern {self.pattern!r} does not match terms {self.terms!r}"
            )
        if len(self.terms) == 1:
            if self.pattern != (NOUN,):
                raise ValueError(f"unigram pattern must be NOUN, got {self.pattern!r}")
        else:
            first, second = self.pattern
            if first not in DESCRIPTOR_TAGS or second not in OBJECT_TAGS:
                raise ValueError(
                    f"bigram pattern must be descriptor-object, got {self.pattern!r}"
                )

    @property
    def order(self) -> int:
        return len(self.terms)

    def __str__(self) -> str:
        return " ".join(self.terms)


def extract_ngrams(tokens: Sequence[TaggedToken]) -> list[NGram]:
    """Extract the admissible n-grams of one comment, duplicates retained.

    Returns unigrams in sentence order followed by bigrams in sentence
    order.  Tokens whose tags fit no pattern contribute nothing.
    """
    unigrams: list[NGram] = []
    bigrams: list[NGram] = []
    for i, tok in enumerate(tokens):
        if tok.tag == NOUN:
            unigrams.append(NGram((tok.surface,), (NOUN,)))
        if i + 1 < len(tokens):
            nxt = tokens[i + 1]
            if tok.tag in DESCRIPTOR_TAGS and nxt.tag in OBJECT_TAGS:
                bigrams.append(
                    NGram((tok.surface, nxt.surface), (tok.tag, nxt.tag))
                )
    return unigrams + bigrams


@dataclass(frozen=True)
class VocabEntry:
    """Counts and probability for one vocabulary n-gram."""

    ngram: NGram
    corpus_freq: int
    doc_freq: int
    prob: float


@dataclass(frozen=True)
class Vocabulary:
    """The pooled unigram+bigram probability table of a corpus.

    ``entries`` maps an n-gram's terms tuple to its entry; iteration is in
    (order, terms) order.  ``source_hash`` is the content hash of the
    corpus the table was counted from, letting the scorer refuse to score
    a different corpus by accident.  ``pooled`` records whether unigrams
    and bigrams share one probability simplex (the default) or were
    normalized per order.
    """

    entries: Mapping[tuple[str, ...], VocabEntry]
    total_count: int
    source_hash: str = ""
    pooled: bool = True
    n_comments: int = 0

    @property
    def size(self) -> int:
        """Number of distinct n-grams (the D of the smoothing floor)."""
        return len(self.entries)

    @property
    def oov_floor(self) -> float:
        """Probability assigned to n-grams never seen in the corpus.

        1/(total_count + D + 1) is strictly below 1/total_count, hence
        below every in-vocabulary probability (all counts are >= 1).
        """
        return 1.0 / (self.total_count + self.size + 1)

    def prob(self, ngram: NGram) -> float:
        entry = self.entries.get(ngram.terms)
        if entry is None:
            return self.oov_floor
        return entry.prob

    def __iter__(self) -> Iterator[VocabEntry]:
        return iter(self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)


def _count_shard(
    images: Sequence, counts: Counter, doc_freq: Counter, patterns: dict
) -> None:
    """Accumulate n-gram statistics for a slice of images (one map task)."""
    for im in images:
        for c in im.comments:
            grams = extract_ngrams(c.tokens)
            for g in grams:
                counts[g.terms] += 1
                prev = patterns.get(g.terms)
                # Tag patterns can differ across occurrences in pre-tagged
                # corpora; keep the lexicographic minimum so shard merge
                # order cannot change the result.
                if prev is None or g.pattern < prev:
                    patterns[g.terms] = g.pattern
            for terms in {g.terms for g in grams}:
                doc_freq[terms] += 1


def build_vocabulary(corpus: Corpus, pooled: bool = True, threads: int = 1) -> Vocabulary:
    """Count every admissible n-gram in the corpus and normalize.

    Counting is a deterministic map-reduce: images may be sharded across
    threads and the per-shard counters merged by summation, so the result
    never depends on shard boundaries.  ``doc_freq`` counts the number of
    comments containing an n-gram at least once.  With ``pooled`` (the
    default) probabilities are normalized over the combined table; with
    ``pooled=False`` each order is normalized separately for comparison
    experiments.
    """
    shards: list[tuple[Counter, Counter, dict]]
    if threads > 1 and corpus.n_images > 1:
        n = min(threads, corpus.n_images)
        chunks = [corpus.images[i::n] for i in range(n)]
        shards = [(Counter(), Counter(), {}) for _ in chunks]
        with ThreadPoolExecutor(max_workers=n) as pool:
            list(
                pool.map(
                    lambda pair: _count_shard(pair[0], *pair[1]),
                    zip(chunks, shards),
                )
            )
    else:
        shards = [(Counter(), Counter(), {})]
        _count_shard(corpus.images, *shards[0])

    counts: Counter = Counter()
    doc_freq: Counter = Counter()
    patterns: dict[tuple[str, ...], tuple[str, ...]] = {}
    for shard_counts, shard_df, shard_patterns in shards:
        counts.update(shard_counts)
        doc_freq.update(shard_df)
        for terms, pat in shard_patterns.items():
            prev = patterns.get(terms)
            if prev is None or pat < prev:
                patterns[terms] = pat

    if not counts:
        raise CorpusFormatError(
            "vocabulary empty: the corpus yields no admissible n-grams"
        )

    total = sum(counts.values())
    order_totals = {1: 0, 2: 0}
    for terms, c in counts.items():
        order_totals[len(terms)] += c

    entries: dict[tuple[str, ...], VocabEntry] = {}
    for terms in sorted(counts, key=lambda t: (len(t), t)):
        denom = total if pooled else order_totals[len(terms)]
        entries[terms] = VocabEntry(
            ngram=NGram(terms, patterns[terms]),
            corpus_freq=counts[terms],
            doc_freq=doc_freq[terms],
            prob=counts[terms] / denom,
        )
    return Vocabulary(
        entries=entries,
        total_count=total,
        source_hash=corpus.content_hash(),
        pooled=pooled,
        n_comments=corpus.n_comments,
    )


def corpus_probability(vocab: Vocabulary, ngram: NGram) -> float:
    """P(w) for in-vocabulary n-grams, the smoothing floor otherwise."""
    return vocab.prob(ngram)
