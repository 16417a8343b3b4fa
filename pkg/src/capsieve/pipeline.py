"""Corpus preparation and summary statistics shared by the CLI stages.

Preparation turns raw comment text into tagged tokens: normalize,
tokenize, drop comments failing the English-content gate, tag the rest,
and prune images left without comments.  Pre-tagged corpora skip all of
that and are trusted as-is.  Preparation is deterministic, so every
stage that re-prepares the same input under the same config sees the
same token stream (and hence the same corpus content hash).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .config import PipelineConfig
from .corpus_io import Corpus, ImageEntry
from .textnorm import Lexicon, is_noise_comment, normalize_text, pos_tag, tokenize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrepStats:
    """What preparation dropped and why."""

    images_in: int
    images_out: int
    comments_in: int
    comments_out: int
    comments_noise: int


def load_lexicon(config: PipelineConfig) -> Lexicon:
    return Lexicon.load(config.lexicon_path, config.stopwords_path)


def prepare_corpus(
    corpus: Corpus, lexicon: Lexicon, config: PipelineConfig | None = None
) -> tuple[Corpus, PrepStats]:
    """Tokenize and tag every comment, dropping noise.

    A comment is noise when fewer than the configured fraction of its
    wordlike tokens are known to the lexicon or stopword list (or it has
    no wordlike tokens at all).  Images whose comments are all noise are
    pruned.  Comments that already carry tokens (pre-tagged input) pass
    through unchanged and are never gated.
    """
    config = config or PipelineConfig()
    images: list[ImageEntry] = []
    comments_in = 0
    comments_out = 0
    noise = 0
    for im in corpus.images:
        kept = []
        for c in im.comments:
            comments_in += 1
            if c.tokens:
                kept.append(c)
                comments_out += 1
                continue
            surfaces = tokenize(normalize_text(c.raw_text))
            if is_noise_comment(surfaces, lexicon, config.english_hit_threshold):
                noise += 1
                continue
            kept.append(replace(c, tokens=pos_tag(surfaces, lexicon)))
            comments_out += 1
        if kept:
            images.append(ImageEntry(im.image_id, tuple(kept)))
    prepared = Corpus.from_images(images, provenance=dict(corpus.provenance))
    stats = PrepStats(
        images_in=corpus.n_images,
        images_out=prepared.n_images,
        comments_in=comments_in,
        comments_out=comments_out,
        comments_noise=noise,
    )
    if noise:
        log.info(
            "preparation dropped %d of %d comments as noise (%d images pruned)",
            noise,
            comments_in,
            stats.images_in - stats.images_out,
        )
    return prepared, stats


def corpus_stats(corpus: Corpus, prepared: Corpus, prep: PrepStats, vocab_size: int) -> dict:
    """Assemble the `stats` subcommand report."""
    token_counts = sorted(
        len(c.tokens) for _, c in prepared.iter_comments()
    )
    if token_counts:
        n = len(token_counts)
        mid = n // 2
        median = (
            token_counts[mid]
            if n % 2
            else (token_counts[mid - 1] + token_counts[mid]) / 2
        )
        token_summary = {
            "min": token_counts[0],
            "median": median,
            "mean": sum(token_counts) / n,
            "max": token_counts[-1],
        }
    else:
        token_summary = {"min": 0, "median": 0, "mean": 0.0, "max": 0}
    return {
        "images": corpus.n_images,
        "comments": corpus.n_comments,
        "comments_per_image": (
            corpus.n_comments / corpus.n_images if corpus.n_images else 0.0
        ),
        "prepared_images": prepared.n_images,
        "prepared_comments": prepared.n_comments,
        "noise_comments": prep.comments_noise,
        "tokens_per_comment": token_summary,
        "vocabulary_size": vocab_size,
    }
