"""Comment informativeness scoring and threshold filtering.

A comment is reduced to its admissible unigrams u_1..u_N and bigrams
b_1..b_M and scored

    rho = -1/2 * [ log prod_i P(u_i) + log prod_j P(b_j) ]

against the corpus probability table.  Rare n-grams carry large -log P,
so rho grows with specific content; generic praise scores near zero.  A
comment is kept when rho >= threshold (default 20).  An empty product
contributes log 1 = 0, so a comment with no admissible n-grams scores
exactly 0 and is always discarded at any positive threshold.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

from .corpus_io import Corpus, FilterSummary
from .errors import ConfigurationError, MismatchError
from .ngrams import Vocabulary, extract_ngrams
from .textnorm import TaggedToken

log = logging.getLogger(__name__)

HISTOGRAM_BINS = 101  # unit bins over [0, 100) plus one overflow bin


@dataclass(frozen=True)
class FilterConfig:
    """Keep/discard policy for scored comments.

    ``log_base`` of None means natural log; any other base rescales every
    score by 1/ln(base), which rescales the threshold semantics with it.
    """

    threshold: float = 20.0
    log_base: float | None = None

    def __post_init__(self) -> None:
        if not self.threshold > 0:
            raise ConfigurationError(f"threshold must be > 0, got {self.threshold}")
        if self.log_base is not None and (self.log_base <= 0 or self.log_base == 1.0):
            raise ConfigurationError(f"invalid log base {self.log_base}")


@dataclass(frozen=True)
class FilterDecision:
    """The scored keep/discard outcome for one comment."""

    image_id: str
    comment_id: str
    score: float
    kept: bool
    n_unigrams: int | None = None
    n_bigrams: int | None = None


def score_comment(
    tokens: Sequence[TaggedToken], vocab: Vocabulary, log_base: float | None = None
) -> float:
    """Informativeness score of one tagged comment, always >= 0."""
    log_sum = 0.0
    for g in extract_ngrams(tokens):
        log_sum += math.log(vocab.prob(g))
    if log_sum == 0.0:
        return 0.0
    rho = -0.5 * log_sum
    if log_base is not None:
        rho /= math.log(log_base)
    return rho


def filter_corpus(
    corpus: Corpus,
    vocab: Vocabulary,
    config: FilterConfig | None = None,
    allow_cross_corpus: bool = False,
) -> list[FilterDecision]:
    """Score every comment and decide keep/discard, one decision each.

    The vocabulary must have been built from this exact corpus (matching
    content hash); scoring against a different corpus is refused unless
    ``allow_cross_corpus`` is set, in which case out-of-vocabulary n-grams
    fall back to the smoothing floor and a provenance warning is logged.
    Decisions come back sorted by (image_id, comment_id).
    """
    config = config or FilterConfig()
    if vocab.source_hash and vocab.source_hash != corpus.content_hash():
        if not allow_cross_corpus:
            raise MismatchError(
                "vocabulary was built from a different corpus "
                f"(vocabulary hash {vocab.source_hash[:12]}..., corpus hash "
                f"{corpus.content_hash()[:12]}...); pass allow_cross_corpus "
                "to score anyway"
            )
        log.warning(
            "scoring a corpus the vocabulary was not built from; "
            "out-of-vocabulary n-grams use the smoothing floor %.3e",
            vocab.oov_floor,
        )

    decisions: list[FilterDecision] = []
    for image_id, comment in corpus.iter_comments():
        grams = extract_ngrams(comment.tokens)
        rho = score_comment(comment.tokens, vocab, config.log_base)
        decisions.append(
            FilterDecision(
                image_id=image_id,
                comment_id=comment.comment_id,
                score=rho,
                kept=rho >= config.threshold,
                n_unigrams=sum(1 for g in grams if g.order == 1),
                n_bigrams=sum(1 for g in grams if g.order == 2),
            )
        )
    decisions.sort(key=lambda d: (d.image_id, d.comment_id))
    return decisions


def filter_stats(decisions: Sequence[FilterDecision]) -> FilterSummary:
    """Aggregate decisions into discard/survival statistics.

    Surviving images are those with at least one kept comment; the
    mean/sd of kept comments per image run over surviving images.  The
    histogram covers all scores (kept and discarded) in unit-width bins
    over [0, 100) with a final overflow bin.
    """
    kept_per_image: dict[str, int] = {}
    images: set[str] = set()
    histogram = [0] * HISTOGRAM_BINS
    kept_total = 0
    for d in decisions:
        images.add(d.image_id)
        bin_idx = min(int(d.score), HISTOGRAM_BINS - 1) if d.score >= 0 else 0
        histogram[bin_idx] += 1
        if d.kept:
            kept_total += 1
            kept_per_image[d.image_id] = kept_per_image.get(d.image_id, 0) + 1

    n = len(decisions)
    survivors = len(kept_per_image)
    mean = kept_total / survivors if survivors else 0.0
    sd = (
        (sum((c - mean) ** 2 for c in kept_per_image.values()) / survivors) ** 0.5
        if survivors
        else 0.0
    )
    return FilterSummary(
        images_in=len(images),
        images_out=survivors,
        comments_in=n,
        comments_out=kept_total,
        mean_kept_per_image=mean,
        discard_fraction=(1.0 - kept_total / n) if n else 0.0,
        sd_kept_per_image=sd,
        score_histogram=tuple(histogram),
    )
