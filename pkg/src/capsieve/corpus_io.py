"""Image-comment corpus ingestion and persistence.

The on-disk corpus format is JSON-lines, one image per line::

    {"image_id": "123", "comments": [{"id": "c1", "text": "nice shot"}, ...]}

Comments may optionally carry parallel ``tokens`` and ``tags`` arrays when
the corpus was tagged elsewhere.  All in-memory structures are immutable
and iterate in lexicographic image_id order, which keeps every downstream
statistic deterministic.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .errors import CapsieveError, CorpusFormatError
from .textnorm import TaggedToken, coerce_tag

log = logging.getLogger(__name__)

# Below this many lines the malformed-fraction gate only warns; a tiny
# hand-written fixture with one bad line should still load.
_MALFORMED_GATE_MIN_LINES = 20
_MALFORMED_GATE_FRACTION = 0.10


@dataclass(frozen=True)
class Comment:
    """One user comment, optionally tokenized and scored."""

    comment_id: str
    raw_text: str
    tokens: tuple[TaggedToken, ...] = ()
    score: float | None = None
    kept: bool | None = None


@dataclass(frozen=True)
class ImageEntry:
    """One image and its ordered comments."""

    image_id: str
    comments: tuple[Comment, ...]


@dataclass(frozen=True)
class Corpus:
    """An immutable image-comment corpus, sorted by image_id."""

    images: tuple[ImageEntry, ...]
    provenance: Mapping[str, object] = field(default_factory=dict)

    @classmethod
    def from_images(
        cls, images: Sequence[ImageEntry], provenance: Mapping[str, object] | None = None
    ) -> "Corpus":
        ordered = tuple(sorted(images, key=lambda im: im.image_id))
        seen: set[str] = set()
        for im in ordered:
            if im.image_id in seen:
                raise CorpusFormatError(f"duplicate image_id {im.image_id!r}")
            seen.add(im.image_id)
            cids = [c.comment_id for c in im.comments]
            if len(cids) != len(set(cids)):
                raise CorpusFormatError(
                    f"duplicate comment ids within image {im.image_id!r}"
                )
        return cls(ordered, dict(provenance or {}))

    @property
    def n_images(self) -> int:
        return len(self.images)

    @property
    def n_comments(self) -> int:
        return sum(len(im.comments) for im in self.images)

    def iter_comments(self) -> Iterator[tuple[str, Comment]]:
        for im in self.images:
            for c in im.comments:
                yield im.image_id, c

    def content_hash(self) -> str:
        """Hash of ids plus tokenized content (text where untokenized).

        Binds a vocabulary to the exact corpus it was counted from: any
        change to normalization, tagging, or the underlying text changes
        the hash.
        """
        h = hashlib.sha256()
        for image_id, c in self.iter_comments():
            if c.tokens:
                body = " ".join(f"{t.surface}/{t.tag}" for t in c.tokens)
            else:
                body = c.raw_text
            h.update(f"{image_id}\x1f{c.comment_id}\x1f{body}\n".encode("utf-8"))
        return h.hexdigest()


def _parse_line(line_no: int, line: str, pre_tagged: bool):
    """Parse one JSONL line; returns (ImageEntry, None) or (None, reason)."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        return None, f"line {line_no}: invalid JSON ({e.msg})"
    if not isinstance(obj, dict) or "image_id" not in obj:
        return None, f"line {line_no}: missing image_id"
    image_id = obj["image_id"]
    if not isinstance(image_id, str) or not image_id:
        return None, f"line {line_no}: image_id must be a non-empty string"
    raw_comments = obj.get("comments")
    if not isinstance(raw_comments, list):
        return None, f"line {line_no}: missing comments array"
    comments = []
    seen_ids: set[str] = set()
    for c in raw_comments:
        if not isinstance(c, dict):
            return None, f"line {line_no}: comment entries must be objects"
        cid = c.get("id")
        text = c.get("text")
        if not isinstance(cid, str) or not cid:
            return None, f"line {line_no}: comment missing id"
        if cid in seen_ids:
            return None, f"line {line_no}: duplicate comment id {cid!r}"
        seen_ids.add(cid)
        if not isinstance(text, str) or not text.strip():
            return None, f"line {line_no}: comment {cid!r} has empty text"
        tokens: tuple[TaggedToken, ...] = ()
        if pre_tagged:
            surfs = c.get("tokens")
            tags = c.get("tags")
            if not isinstance(surfs, list) or not isinstance(tags, list):
                return None, f"line {line_no}: comment {cid!r} lacks tokens/tags"
            if len(surfs) != len(tags):
                return None, f"line {line_no}: comment {cid!r} tokens/tags length mismatch"
            try:
                tokens = tuple(
                    TaggedToken(str(s), coerce_tag(str(t))) for s, t in zip(surfs, tags)
                )
            except ValueError as e:
                return None, f"line {line_no}: comment {cid!r}: {e}"
        comments.append(Comment(cid, text, tokens))
    return ImageEntry(image_id, tuple(comments)), None


def load_corpus(path: str | Path, pre_tagged: bool = False, threads: int = 1) -> Corpus:
    """Load a JSON-lines corpus, tolerating a small fraction of bad lines.

    Malformed lines are counted and reported; when more than 10% of a
    non-trivial file (>= 20 lines) is malformed, loading fails hard and
    names the first 20 offending line numbers.  Blank lines are ignored.
    Line parsing may be sharded across threads; the result is merged by
    image_id sort, so the outcome does not depend on thread scheduling.
    """
    p = Path(path)
    try:
        raw_lines = p.read_text("utf-8").splitlines()
    except OSError as e:
        raise CorpusFormatError(f"cannot read corpus file {p}: {e}") from e

    numbered = [(i, ln) for i, ln in enumerate(raw_lines, start=1) if ln.strip()]

    if threads > 1 and len(numbered) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parsed = list(
                pool.map(lambda pair: _parse_line(pair[0], pair[1], pre_tagged), numbered)
            )
    else:
        parsed = [_parse_line(i, ln, pre_tagged) for i, ln in numbered]

    images: list[ImageEntry] = []
    seen: set[str] = set()
    bad: list[str] = []
    bad_line_nos: list[int] = []
    for (line_no, _), (entry, reason) in zip(numbered, parsed):
        if reason is not None:
            bad.append(reason)
            bad_line_nos.append(line_no)
            continue
        assert entry is not None
        if entry.image_id in seen:
            bad.append(f"line {line_no}: duplicate image_id {entry.image_id!r}")
            bad_line_nos.append(line_no)
            continue
        seen.add(entry.image_id)
        images.append(entry)

    total = len(numbered)
    if total >= _MALFORMED_GATE_MIN_LINES and bad and len(bad) / total > _MALFORMED_GATE_FRACTION:
        offenders = ", ".join(str(n) for n in bad_line_nos[:20])
        raise CorpusFormatError(
            f"{len(bad)}/{total} lines malformed in {p} (>{_MALFORMED_GATE_FRACTION:.0%}); "
            f"first offending lines: {offenders}"
        )
    if bad:
        log.warning("%s: skipped %d malformed line(s); first: %s", p, len(bad), bad[0])
    if not images:
        log.warning("%s: corpus is empty", p)

    return Corpus.from_images(
        images, provenance={"source": str(p), "malformed_lines": len(bad)}
    )


def write_corpus(corpus: Corpus, path: str | Path, include_tags: bool = False) -> None:
    """Write a corpus as JSON-lines in deterministic image_id order."""
    p = Path(path)
    try:
        with p.open("w", encoding="utf-8") as fh:
            for im in corpus.images:
                obj: dict = {
                    "image_id": im.image_id,
                    "comments": [
                        _comment_obj(c, include_tags) for c in im.comments
                    ],
                }
                fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True))
                fh.write("\n")
    except OSError as e:
        raise CapsieveError(f"cannot write corpus to {p}: {e}") from e


def _comment_obj(c: Comment, include_tags: bool) -> dict:
    obj: dict = {"id": c.comment_id, "text": c.raw_text}
    if include_tags and c.tokens:
        obj["tokens"] = [t.surface for t in c.tokens]
        obj["tags"] = [t.tag for t in c.tokens]
    return obj


@dataclass(frozen=True)
class FilterSummary:
    """Bookkeeping for a filtering pass.

    The first five fields are always populated.  The remaining fields are
    derived statistics filled in by ``scoring.filter_stats``; the score
    histogram has unit-width bins over [0, 100) plus one overflow bin.
    """

    images_in: int
    images_out: int
    comments_in: int
    comments_out: int
    mean_kept_per_image: float
    discard_fraction: float = 0.0
    sd_kept_per_image: float = 0.0
    score_histogram: tuple[int, ...] = ()


def write_filtered_corpus(
    corpus: Corpus,
    decisions: Sequence,
    path: str | Path,
    min_comments_per_image: int = 1,
) -> FilterSummary:
    """Write only kept comments; prune images left with too few.

    Every comment in the corpus must have exactly one decision (matched on
    image_id + comment_id); a missing decision is a hard failure naming
    the comment, as is a decision for a comment that does not exist.
    ``mean_kept_per_image`` averages over surviving images.
    """
    by_key = {}
    for d in decisions:
        by_key[(d.image_id, d.comment_id)] = d
    corpus_keys = set()

    survivors: list[ImageEntry] = []
    comments_out = 0
    for im in corpus.images:
        kept_comments = []
        for c in im.comments:
            key = (im.image_id, c.comment_id)
            corpus_keys.add(key)
            d = by_key.get(key)
            if d is None:
                raise CapsieveError(
                    f"no filter decision for comment {c.comment_id!r} "
                    f"(image {im.image_id!r})"
                )
            if d.kept:
                kept_comments.append(replace(c, score=d.score, kept=True))
        if len(kept_comments) >= min_comments_per_image:
            survivors.append(ImageEntry(im.image_id, tuple(kept_comments)))
            comments_out += len(kept_comments)

    extra = set(by_key) - corpus_keys
    if extra:
        iid, cid = sorted(extra)[0]
        raise CapsieveError(
            f"{len(extra)} decision(s) reference comments absent from the corpus, "
            f"e.g. comment {cid!r} (image {iid!r})"
        )

    # Tags ride along so downstream stages can trust the filtered tokens
    # instead of re-running preparation (and its noise gate) on the output.
    out = Corpus.from_images(survivors, provenance=dict(corpus.provenance))
    write_corpus(out, path, include_tags=True)
    kept_counts = [len(im.comments) for im in survivors]
    mean = (comments_out / len(survivors)) if survivors else 0.0
    sd = (
        (sum((c - mean) ** 2 for c in kept_counts) / len(kept_counts)) ** 0.5
        if kept_counts
        else 0.0
    )
    return FilterSummary(
        images_in=corpus.n_images,
        images_out=len(survivors),
        comments_in=corpus.n_comments,
        comments_out=comments_out,
        mean_kept_per_image=mean,
        discard_fraction=(
            1.0 - comments_out / corpus.n_comments if corpus.n_comments else 0.0
        ),
        sd_kept_per_image=sd,
    )
