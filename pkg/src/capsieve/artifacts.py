"""Persistence of derived artifacts: vocabulary, decisions, topic model.

Vocabulary and filter decisions are TSV with `#`-prefixed metadata lines
followed by a header row, human-inspectable and diff-friendly.  Floats
are written with repr() so a round-trip reproduces the double exactly.
The topic model is a versioned binary: an 8-byte magic, a length-prefixed
JSON header (hyperparameters, image ids, vocabulary terms), then the
count/estimate arrays in fixed order via np.save.  A small JSON sidecar
mirrors the hyperparameters for tooling that should not parse the binary.
"""

from __future__ import annotations

import json
import logging
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ArtifactFormatError
from .lda import LdaVocabulary, TopicModel
from .ngrams import NGram, VocabEntry, Vocabulary
from .scoring import FilterDecision

log = logging.getLogger(__name__)

TOPIC_MODEL_MAGIC = b"CRFT0001"

_VOCAB_HEADER = "ngram\torder\tpattern\tcorpus_freq\tdoc_freq\tprob"
_DECISIONS_HEADER = "image_id\tcomment_id\tscore\tkept"


def write_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write the n-gram table as TSV, one row per entry."""
    p = Path(path)
    with p.open("w", encoding="utf-8") as fh:
        fh.write("# capsieve vocabulary v1\n")
        fh.write(f"# source_hash {vocab.source_hash}\n")
        fh.write(f"# total_count {vocab.total_count}\n")
        fh.write(f"# n_comments {vocab.n_comments}\n")
        fh.write(f"# pooled {int(vocab.pooled)}\n")
        fh.write(_VOCAB_HEADER + "\n")
        for entry in vocab:
            fh.write(
                f"{' '.join(entry.ngram.terms)}\t{entry.ngram.order}\t"
                f"{' '.join(entry.ngram.pattern)}\t{entry.corpus_freq}\t"
                f"{entry.doc_freq}\t{entry.prob!r}\n"
            )


def load_vocabulary(path: str | Path) -> Vocabulary:
    """Read a vocabulary TSV back; inverse of write_vocabulary."""
    p = Path(path)
    meta: dict[str, str] = {}
    entries: dict[tuple[str, ...], VocabEntry] = {}
    header_seen = False
    with p.open("r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                parts = line[2:].split(" ", 1)
                if len(parts) == 2:
                    meta[parts[0]] = parts[1]
                continue
            if not header_seen:
                if line != _VOCAB_HEADER:
                    raise ArtifactFormatError(
                        f"{p}:{line_no}: expected vocabulary header, got {line!r}"
                    )
                header_seen = True
                continue
            cols = line.split("\t")
            if len(cols) != 6:
                raise ArtifactFormatError(
                    f"{p}:{line_no}: expected 6 columns, got {len(cols)}"
                )
            terms = tuple(cols[0].split(" "))
            pattern = tuple(cols[2].split(" "))
            try:
                order = int(cols[1])
                corpus_freq = int(cols[3])
                doc_freq = int(cols[4])
                prob = float(cols[5])
                ngram = NGram(terms, pattern)
            except ValueError as e:
                raise ArtifactFormatError(f"{p}:{line_no}: {e}") from e
            if order != ngram.order:
                raise ArtifactFormatError(
                    f"{p}:{line_no}: order column {order} does not match "
                    f"{len(terms)}-term n-gram"
                )
            if doc_freq > corpus_freq or corpus_freq < 1 or not prob > 0:
                raise ArtifactFormatError(
                    f"{p}:{line_no}: inconsistent counts/probability"
                )
            if terms in entries:
                raise ArtifactFormatError(f"{p}:{line_no}: duplicate n-gram {cols[0]!r}")
            entries[terms] = VocabEntry(ngram, corpus_freq, doc_freq, prob)
    if not header_seen:
        raise ArtifactFormatError(f"{p}: not a vocabulary file (no header)")
    if not entries:
        raise ArtifactFormatError(f"{p}: vocabulary file has no entries")
    try:
        total_count = int(meta["total_count"])
        n_comments = int(meta.get("n_comments", "0"))
        pooled = bool(int(meta.get("pooled", "1")))
    except (KeyError, ValueError) as e:
        raise ArtifactFormatError(f"{p}: bad or missing metadata: {e}") from e
    return Vocabulary(
        entries=entries,
        total_count=total_count,
        source_hash=meta.get("source_hash", ""),
        pooled=pooled,
        n_comments=n_comments,
    )


def write_decisions(
    decisions: Sequence[FilterDecision],
    path: str | Path,
    threshold: float | None = None,
) -> None:
    """Write filter decisions as TSV, one row per comment."""
    p = Path(path)
    with p.open("w", encoding="utf-8") as fh:
        fh.write("# capsieve decisions v1\n")
        if threshold is not None:
            fh.write(f"# threshold {threshold!r}\n")
        fh.write(_DECISIONS_HEADER + "\n")
        for d in decisions:
            fh.write(f"{d.image_id}\t{d.comment_id}\t{d.score!r}\t{int(d.kept)}\n")


def load_decisions(path: str | Path) -> list[FilterDecision]:
    """Read decisions TSV back; n-gram counts are not persisted."""
    p = Path(path)
    decisions: list[FilterDecision] = []
    header_seen = False
    with p.open("r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                continue
            if not header_seen:
                if line != _DECISIONS_HEADER:
                    raise ArtifactFormatError(
                        f"{p}:{line_no}: expected decisions header, got {line!r}"
                    )
                header_seen = True
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise ArtifactFormatError(
                    f"{p}:{line_no}: expected 4 columns, got {len(cols)}"
                )
            try:
                score = float(cols[2])
                kept = {"0": False, "1": True}[cols[3]]
            except (ValueError, KeyError) as e:
                raise ArtifactFormatError(f"{p}:{line_no}: {e!r}") from e
            decisions.append(FilterDecision(cols[0], cols[1], score, kept))
    if not header_seen:
        raise ArtifactFormatError(f"{p}: not a decisions file (no header)")
    return decisions


_MODEL_ARRAYS = ("term_ids", "doc_offsets", "z", "n_kw", "n_dk", "n_k", "phi", "theta")


def write_topic_model(model: TopicModel, path: str | Path) -> None:
    """Write the model binary plus its JSON hyperparameter sidecar."""
    p = Path(path)
    header = {
        "k": model.k,
        "alpha": model.alpha,
        "beta": model.beta,
        "iters": model.iters,
        "burn_in": model.burn_in,
        "seed": model.seed,
        "m": model.vocab.size,
        "n_docs": model.n_docs,
        "average_samples": model.average_samples,
        "vocab_hash": model.vocab.vocab_hash(),
        "image_ids": list(model.image_ids),
        "terms": [list(g.terms) for g in model.vocab.terms],
        "patterns": [list(g.pattern) for g in model.vocab.terms],
    }
    blob = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    with p.open("wb") as fh:
        fh.write(TOPIC_MODEL_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for name in _MODEL_ARRAYS:
            np.save(fh, getattr(model, name), allow_pickle=False)
    sidecar = {
        "K": model.k,
        "alpha": model.alpha,
        "beta": model.beta,
        "iters": model.iters,
        "seed": model.seed,
        "vocab_hash": model.vocab.vocab_hash(),
    }
    Path(str(p) + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_topic_model(path: str | Path) -> TopicModel:
    """Read a topic model binary back; inverse of write_topic_model."""
    p = Path(path)
    with p.open("rb") as fh:
        magic = fh.read(len(TOPIC_MODEL_MAGIC))
        if magic != TOPIC_MODEL_MAGIC:
            raise ArtifactFormatError(
                f"{p}: bad magic header: expected {TOPIC_MODEL_MAGIC!r}, got {magic!r}"
            )
        length_bytes = fh.read(8)
        if len(length_bytes) != 8:
            raise ArtifactFormatError(f"{p}: truncated model header")
        (blob_len,) = struct.unpack("<Q", length_bytes)
        try:
            header = json.loads(fh.read(blob_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ArtifactFormatError(f"{p}: corrupt model header: {e}") from e
        arrays = {}
        for name in _MODEL_ARRAYS:
            try:
                arrays[name] = np.load(fh, allow_pickle=False)
            except (ValueError, EOFError) as e:
                raise ArtifactFormatError(f"{p}: corrupt array {name!r}: {e}") from e

    try:
        terms = tuple(
            NGram(tuple(t), tuple(pat))
            for t, pat in zip(header["terms"], header["patterns"], strict=True)
        )
        vocab = LdaVocabulary(terms)
        model = TopicModel(
            k=int(header["k"]),
            alpha=float(header["alpha"]),
            beta=float(header["beta"]),
            iters=int(header["iters"]),
            burn_in=int(header["burn_in"]),
            seed=int(header["seed"]),
            vocab=vocab,
            image_ids=tuple(header["image_ids"]),
            average_samples=bool(header["average_samples"]),
            **arrays,
        )
    except (KeyError, ValueError) as e:
        raise ArtifactFormatError(f"{p}: incomplete model header: {e!r}") from e
    if vocab.vocab_hash() != header["vocab_hash"]:
        raise ArtifactFormatError(
            f"{p}: vocabulary hash mismatch: stored {header['vocab_hash'][:12]}..., "
            f"recomputed {vocab.vocab_hash()[:12]}..."
        )
    if model.n_kw.shape != (model.k, vocab.size) or model.theta.shape[1] != model.k:
        raise ArtifactFormatError(f"{p}: array shapes inconsistent with header")
    return model


def write_thetas(
    path: str | Path, image_ids: Sequence[str], thetas: Sequence[Sequence[float]]
) -> None:
    """Write per-image topic distributions as JSON-lines weak labels."""
    p = Path(path)
    with p.open("w", encoding="utf-8") as fh:
        for iid, theta in zip(image_ids, thetas, strict=True):
            fh.write(
                json.dumps(
                    {"image_id": iid, "theta": [float(x) for x in theta]},
                    sort_keys=True,
                )
            )
            fh.write("\n")


def load_thetas(path: str | Path) -> dict[str, list[float]]:
    """Read a weak-label JSONL file back as {image_id: theta}."""
    p = Path(path)
    out: dict[str, list[float]] = {}
    with p.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out[obj["image_id"]] = [float(x) for x in obj["theta"]]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ArtifactFormatError(f"{p}:{line_no}: {e!r}") from e
    return out
