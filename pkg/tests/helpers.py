"""Deterministic random fixture generators shared across test modules."""

from __future__ import annotations

import random

from capsieve import Comment, Corpus, ImageEntry, TaggedToken

TAGS = ("NOUN", "ADJ", "ADV", "VERB", "OTHER")

# Small pools keep collision rates high enough that fuzz corpora exercise
# duplicate n-grams, shared doc frequencies, and clipping.
WORDS = [f"w{i:02d}" for i in range(40)]
CAPTION_WORDS = ["sky", "light", "tone", "crop", "blur", "edge", "red", "soft"]


def tagged_comment(rng: random.Random, min_len=1, max_len=12) -> list[TaggedToken]:
    n = rng.randint(min_len, max_len)
    return [TaggedToken(rng.choice(WORDS), rng.choice(TAGS)) for _ in range(n)]


def tagged_corpus(rng: random.Random, n_images=10, min_comments=1, max_comments=6) -> Corpus:
    """Random pre-tagged corpus; always contains at least one noun so the
    vocabulary is never empty."""
    images = []
    for i in range(n_images):
        comments = []
        for j in range(rng.randint(min_comments, max_comments)):
            comments.append(
                Comment(f"c{j}", "synthetic", tuple(tagged_comment(rng)))
            )
        images.append(ImageEntry(f"im{i:04d}", tuple(comments)))
    anchor = Comment("anchor", "synthetic", (TaggedToken("anchorword", "NOUN"),))
    images.append(ImageEntry("im_anchor", (anchor,)))
    return Corpus.from_images(images)


def as_pairs(tokens) -> list[tuple[str, str]]:
    """TaggedToken sequence -> plain (surface, tag) pairs for the oracles."""
    return [(t.surface, t.tag) for t in tokens]


def caption(rng: random.Random, min_len=0, max_len=12) -> tuple[str, ...]:
    return tuple(rng.choice(CAPTION_WORDS) for _ in range(rng.randint(min_len, max_len)))


def caption_fixture(rng: random.Random, max_images=5):
    """Random aligned candidates/references over >= 2 images.

    References are never empty (the caption-set contract); candidates may
    be, exercising the degenerate branches.
    """
    n_images = rng.randint(2, max_images)
    cands = {}
    refs = {}
    for i in range(n_images):
        iid = f"ev{i:03d}"
        cands[iid] = caption(rng, 0, 12)
        refs[iid] = tuple(caption(rng, 1, 12) for _ in range(rng.randint(1, 3)))
    return cands, refs
