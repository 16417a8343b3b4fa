"""Web-text cleanup, tokenization, and coarse part-of-speech tagging.

Comments scraped from photo-critique sites carry the usual social-media
noise: elongated words ("woooow"), stacked punctuation ("!!!!"), HTML
entities, and stretches of non-English text.  This module turns such raw
strings into lowercase token sequences tagged with a five-way coarse
tagset, which is all the downstream n-gram admission patterns need.
"""

from __future__ import annotations

import html
import logging
import re
import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigurationError

log = logging.getLogger(__name__)

NOUN = "NOUN"
ADJ = "ADJ"
ADV = "ADV"
VERB = "VERB"
OTHER = "OTHER"
COARSE_TAGS = frozenset({NOUN, ADJ, ADV, VERB, OTHER})

MAX_TOKEN_LEN = 30

# Same character repeated more than twice, e.g. "woooow" -> "woow".
_SAME_CHAR_RUN = re.compile(r"(.)\1{2,}", re.DOTALL)
# Two or more adjacent punctuation marks collapse to the first one.
_PUNCT_RUN = re.compile(r"([^\w\s])[^\w\s]+")
# Word = letters/digits, optionally joined by interior hyphens/apostrophes.
_TOKEN = re.compile(r"[^\W_]+(?:['’-][^\W_]+)*")

_WORDLIKE_EXTRA = {"'", "’", "-"}

# Suffix fallbacks applied to tokens absent from the lexicon.  Derivational
# noun suffixes lean NOUN on purpose: critique vocabulary ("processing",
# "lighting", "sharpness") is mostly nominal.
_SUFFIX_RULES: tuple[tuple[str, str], ...] = (
    ("ness", NOUN),
    ("tion", NOUN),
    ("ing", NOUN),
    ("ful", ADJ),
    ("ous", ADJ),
    ("ive", ADJ),
    ("ly", ADV),
)
_MIN_STEM = 3


@dataclass(frozen=True)
class TaggedToken:
    """A lowercase surface form with its coarse part-of-speech tag."""

    surface: str
    tag: str

    def __post_init__(self) -> None:
        if not self.surface or any(c.isspace() for c in self.surface):
            raise ValueError(f"bad token surface: {self.surface!r}")
        if self.tag not in COARSE_TAGS:
            raise ValueError(f"unknown tag {self.tag!r} for {self.surface!r}")


def normalize_text(raw: str) -> str:
    """Clean generic web-text noise from a raw comment string.

    Decodes HTML entities (repeatedly, so double-escaped input settles),
    applies Unicode NFKC, lowercases, collapses runs of a repeated
    character down to two, and collapses runs of punctuation to a single
    mark.  Total and idempotent; empty input yields empty output.
    """
    text = raw
    for _ in range(4):
        unescaped = html.unescape(text)
        if unescaped == text:
            break
        text = unescaped
    text = unicodedata.normalize("NFKC", text)
    text = text.lower()
    text = _SAME_CHAR_RUN.sub(r"\1\1", text)
    text = _PUNCT_RUN.sub(r"\1", text)
    return text


def tokenize(normalized: str) -> list[str]:
    """Split normalized text on whitespace and punctuation boundaries.

    Interior hyphens and apostrophes stay inside their token
    ("post-processing", "doesn't").  Tokens longer than ``MAX_TOKEN_LEN``
    characters are noise (URLs, keyboard mashes) and are dropped.
    """
    return [t for t in _TOKEN.findall(normalized) if len(t) <= MAX_TOKEN_LEN]


def _is_wordlike(token: str) -> bool:
    return any(c.isalpha() for c in token) and all(
        c.isalpha() or c in _WORDLIKE_EXTRA for c in token
    )


def coerce_tag(tag: str) -> str:
    """Map an externally supplied tag onto the coarse five-way tagset.

    Accepts the coarse tags themselves or Penn-style prefixes
    (NN* -> NOUN, JJ* -> ADJ, RB* -> ADV, VB* -> VERB).  Anything else
    becomes OTHER.
    """
    t = tag.strip().upper()
    if t in COARSE_TAGS:
        return t
    if t.startswith("NN"):
        return NOUN
    if t.startswith("JJ"):
        return ADJ
    if t.startswith("RB"):
        return ADV
    if t.startswith("VB"):
        return VERB
    return OTHER


class Lexicon:
    """Word -> coarse tag table plus a stopword list.

    Ships with a general-purpose English lexicon biased toward
    photo-critique vocabulary; both files can be swapped out by path so a
    domain lexicon drops in without code changes.
    """

    def __init__(self, tags: Mapping[str, str], stopwords: Iterable[str]) -> None:
        self._tags = dict(tags)
        self._stopwords = frozenset(stopwords)
        for word, tag in self._tags.items():
            if tag not in COARSE_TAGS:
                raise ConfigurationError(f"lexicon entry {word!r} has bad tag {tag!r}")

    @classmethod
    def load(
        cls,
        lexicon_path: str | Path | None = None,
        stopword_path: str | Path | None = None,
    ) -> "Lexicon":
        """Load from TSV (``word\\ttag``) and a one-word-per-line stopword file.

        With no paths given, the packaged default data files are used.
        """
        if lexicon_path is None:
            lex_text = (
                resources.files("capsieve.data").joinpath("lexicon.tsv").read_text("utf-8")
            )
        else:
            p = Path(lexicon_path)
            if not p.is_file():
                raise ConfigurationError(f"lexicon file not found: {p}")
            lex_text = p.read_text("utf-8")
        if stopword_path is None:
            stop_text = (
                resources.files("capsieve.data").joinpath("stopwords.txt").read_text("utf-8")
            )
        else:
            p = Path(stopword_path)
            if not p.is_file():
                raise ConfigurationError(f"stopword file not found: {p}")
            stop_text = p.read_text("utf-8")

        tags: dict[str, str] = {}
        for ln, line in enumerate(lex_text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ConfigurationError(f"bad lexicon line {ln}: {line!r}")
            tags[parts[0]] = parts[1]
        stopwords = [
            w.strip()
            for w in stop_text.splitlines()
            if w.strip() and not w.startswith("#")
        ]
        return cls(tags, stopwords)

    def tag_of(self, token: str) -> str | None:
        return self._tags.get(token)

    def known(self, token: str) -> bool:
        """True if the token is in the lexicon or the stopword list."""
        return token in self._tags or token in self._stopwords

    def __len__(self) -> int:
        return len(self._tags)


def pos_tag(tokens: Sequence[str], lexicon: Lexicon) -> list[TaggedToken]:
    """Tag tokens deterministically: lexicon lookup, suffix rules, fallback.

    Unknown word-like tokens default to NOUN (photography jargon such as
    "bokeh" or "dof" is mostly nominal, and NOUN keeps it eligible for the
    vocabulary); tokens with digits or bare punctuation get OTHER.
    """
    out = []
    for token in tokens:
        tag = lexicon.tag_of(token)
        if tag is None:
            tag = _fallback_tag(token)
        out.append(TaggedToken(token, tag))
    return out


def _fallback_tag(token: str) -> str:
    if not _is_wordlike(token):
        return OTHER
    for suffix, tag in _SUFFIX_RULES:
        if len(token) >= len(suffix) + _MIN_STEM and token.endswith(suffix):
            return tag
    return NOUN


def is_noise_comment(
    tokens: Sequence[str], lexicon: Lexicon, english_hit_threshold: float = 0.20
) -> bool:
    """Reject comments that do not look like English.

    A comment is noise when it has no word-like tokens at all, or when
    fewer than ``english_hit_threshold`` of its word-like tokens appear in
    the lexicon or stopword list.  The threshold is a heuristic stand-in
    for a real language identifier and is deliberately permissive.
    """
    wordlike = [t for t in tokens if _is_wordlike(t)]
    if not wordlike:
        return True
    hits = sum(1 for t in wordlike if lexicon.known(t))
    return hits / len(wordlike) < english_hit_threshold


def tag_supplied(
    surfaces: Sequence[str], supplied_tags: Sequence[str]
) -> list[TaggedToken]:
    """Build tagged tokens from externally provided tags (pre-tagged corpora).

    The rule-based tagger is bypassed; supplied tags are only coerced onto
    the coarse tagset, never second-guessed.
    """
    if len(surfaces) != len(supplied_tags):
        raise ValueError(
            f"{len(surfaces)} tokens but {len(supplied_tags)} tags supplied"
        )
    return [TaggedToken(s, coerce_tag(t)) for s, t in zip(surfaces, supplied_tags)]
