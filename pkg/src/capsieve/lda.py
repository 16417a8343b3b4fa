"""Latent topic inference over image documents via collapsed Gibbs sampling.

Each image's kept comments pool into one bag-of-terms document over a
capped n-gram vocabulary.  Collapsed Gibbs sampling resamples every
token's topic assignment from

    p(z_i = k) ∝ (n_dk + alpha) * (n_kw + beta) / (n_k + M*beta)

with the token's own count removed.  Point estimates come from the final
count state:

    phi[k, w]   = (n_kw + beta) / (n_k + M*beta)
    theta[d, k] = (n_dk + alpha) / (len_d + K*alpha)

The theta rows are the per-image topic distributions exported as weak
labels.  All randomness flows through counter-based Philox streams keyed
by (seed, purpose, document, sweep), so a run is bit-reproducible and
independent chains never share a stream.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
from numba import njit

from .corpus_io import Corpus
from .errors import ConfigurationError, MismatchError
from .ngrams import NGram, Vocabulary, extract_ngrams

log = logging.getLogger(__name__)

DEFAULT_TOPICS = 200
DEFAULT_BETA = 0.01
DEFAULT_VOCAB_CAP = 25000
DEFAULT_DOC_FREQ_CAP = 0.10

# Philox counter word 1 separates the training and inference stream
# families; word 2 is the document index, word 3 the sweep (0 = init).
_PURPOSE_TRAIN = 0
_PURPOSE_INFER = 1


def default_alpha(k: int) -> float:
    """The standard symmetric document-topic prior, 50/K."""
    return 50.0 / k


@dataclass(frozen=True)
class LdaVocabulary:
    """Indexed term list the topic model is defined over."""

    terms: tuple[NGram, ...]

    @property
    def size(self) -> int:
        return len(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    @cached_property
    def index(self) -> Mapping[tuple[str, ...], int]:
        return {g.terms: i for i, g in enumerate(self.terms)}

    def vocab_hash(self) -> str:
        h = hashlib.sha256()
        for g in self.terms:
            h.update(" ".join(g.terms).encode("utf-8"))
            h.update(b"\x1f")
            h.update(" ".join(g.pattern).encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()


@dataclass(frozen=True)
class LdaDocument:
    """One image's bag of vocabulary term ids."""

    image_id: str
    term_ids: tuple[int, ...]


def build_lda_vocab(
    vocab: Vocabulary,
    total_comments: int | None = None,
    doc_freq_cap: float = DEFAULT_DOC_FREQ_CAP,
    max_terms: int = DEFAULT_VOCAB_CAP,
) -> LdaVocabulary:
    """Prune the corpus vocabulary down to topic-model terms.

    Drops n-grams occurring in at least ``doc_freq_cap`` of all comments
    (too common to separate topics), then keeps the ``max_terms`` most
    frequent survivors, ties broken lexicographically.  Term ids are
    assigned in that rank order.
    """
    if total_comments is None:
        total_comments = vocab.n_comments
    if total_comments <= 0:
        raise ConfigurationError("total_comments must be positive")
    if not 0 < doc_freq_cap <= 1:
        raise ConfigurationError(f"doc_freq_cap must be in (0, 1], got {doc_freq_cap}")
    if max_terms < 1:
        raise ConfigurationError(f"max_terms must be >= 1, got {max_terms}")

    eligible = [e for e in vocab if e.doc_freq / total_comments < doc_freq_cap]
    if not eligible:
        raise ConfigurationError(
            "topic-model vocabulary is empty: every n-gram exceeds the "
            f"document-frequency cap {doc_freq_cap}"
        )
    eligible.sort(key=lambda e: (-e.corpus_freq, e.ngram.terms))
    return LdaVocabulary(tuple(e.ngram for e in eligible[:max_terms]))


def assemble_documents(filtered: Corpus, vocab: LdaVocabulary) -> list[LdaDocument]:
    """Pool each image's comments into one bag of in-vocabulary term ids.

    Out-of-vocabulary n-grams are dropped; an image whose n-grams are all
    dropped yields an empty document (flagged, later given a uniform
    topic distribution rather than excluded from the export).
    """
    index = vocab.index
    docs: list[LdaDocument] = []
    n_empty = 0
    for im in filtered.images:
        bag: list[int] = []
        for c in im.comments:
            for g in extract_ngrams(c.tokens):
                tid = index.get(g.terms)
                if tid is not None:
                    bag.append(tid)
        if not bag:
            n_empty += 1
        docs.append(LdaDocument(im.image_id, tuple(bag)))
    if n_empty:
        log.warning(
            "%d of %d documents are empty after vocabulary mapping",
            n_empty,
            len(docs),
        )
    return docs


@dataclass(frozen=True)
class TopicModel:
    """Trained topic model: count state, assignments, and point estimates.

    Count matrices are exactly recomputable from (term_ids, doc_offsets,
    z); phi rows and theta rows each sum to one.
    """

    k: int
    alpha: float
    beta: float
    iters: int
    burn_in: int
    seed: int
    vocab: LdaVocabulary
    image_ids: tuple[str, ...]
    term_ids: np.ndarray  # int32, all tokens flattened in document order
    doc_offsets: np.ndarray  # int64, shape (N+1,)
    z: np.ndarray  # int32, parallel to term_ids
    n_kw: np.ndarray  # int64, (K, M)
    n_dk: np.ndarray  # int64, (N, K)
    n_k: np.ndarray  # int64, (K,)
    phi: np.ndarray  # float64, (K, M)
    theta: np.ndarray  # float64, (N, K)
    average_samples: bool = False

    @property
    def n_docs(self) -> int:
        return len(self.image_ids)


@dataclass(frozen=True)
class GibbsCheckpoint:
    """Snapshot of sampler state after a checkpointed sweep."""

    sweep: int
    z: np.ndarray
    n_kw: np.ndarray
    n_dk: np.ndarray
    n_k: np.ndarray


def _stream_uniforms(seed: int, purpose: int, doc: int, sweep: int, n: int) -> np.ndarray:
    """Uniforms from the Philox stream for one (document, sweep) pair."""
    counter = np.array([0, purpose, doc, sweep], dtype=np.uint64)
    key = np.array([seed % (1 << 64), 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key)).random(n)


@njit(cache=True)
def _gibbs_sweep(term_ids, doc_offsets, z, n_kw, n_dk, n_k, alpha, beta, uniforms, scores):
    """One full sweep; mutates z and all count arrays in place."""
    n_topics = n_k.shape[0]
    mbeta = n_kw.shape[1] * beta
    for d in range(doc_offsets.shape[0] - 1):
        for i in range(doc_offsets[d], doc_offsets[d + 1]):
            w = term_ids[i]
            k_old = z[i]
            n_kw[k_old, w] -= 1
            n_dk[d, k_old] -= 1
            n_k[k_old] -= 1
            total = 0.0
            for k in range(n_topics):
                total += (
                    (n_dk[d, k] + alpha) * (n_kw[k, w] + beta) / (n_k[k] + mbeta)
                )
                scores[k] = total
            r = uniforms[i] * total
            k_new = 0
            while k_new < n_topics - 1 and scores[k_new] < r:
                k_new += 1
            z[i] = k_new
            n_kw[k_new, w] += 1
            n_dk[d, k_new] += 1
            n_k[k_new] += 1


@njit(cache=True)
def _infer_sweep(term_ids, z, n_dk_doc, n_kw, n_k, alpha, beta, uniforms, scores):
    """One sweep over a held-out document; global counts are read-only."""
    n_topics = n_k.shape[0]
    mbeta = n_kw.shape[1] * beta
    for i in range(term_ids.shape[0]):
        w = term_ids[i]
        k_old = z[i]
        n_dk_doc[k_old] -= 1
        total = 0.0
        for k in range(n_topics):
            total += (
                (n_dk_doc[k] + alpha) * (n_kw[k, w] + beta) / (n_k[k] + mbeta)
            )
            scores[k] = total
        r = uniforms[i] * total
        k_new = 0
        while k_new < n_topics - 1 and scores[k_new] < r:
            k_new += 1
        z[i] = k_new
        n_dk_doc[k_new] += 1


def _flatten_docs(docs: Sequence[LdaDocument]) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.array([len(d.term_ids) for d in docs], dtype=np.int64)
    doc_offsets = np.zeros(len(docs) + 1, dtype=np.int64)
    np.cumsum(lengths, out=doc_offsets[1:])
    term_ids = np.empty(int(doc_offsets[-1]), dtype=np.int32)
    for d, doc in enumerate(docs):
        term_ids[doc_offsets[d] : doc_offsets[d + 1]] = doc.term_ids
    return term_ids, doc_offsets


def train_lda(
    docs: Sequence[LdaDocument],
    vocab: LdaVocabulary,
    k: int = DEFAULT_TOPICS,
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
    iters: int = 200,
    burn_in: int = 100,
    seed: int = 0,
    average_samples: bool = False,
    checkpoint_every: int | None = None,
    on_checkpoint: Callable[[GibbsCheckpoint], None] | None = None,
) -> TopicModel:
    """Run a collapsed Gibbs chain and return the fitted model.

    Point estimates use the final sample by default; with
    ``average_samples`` the post-burn-in per-sweep estimates of phi and
    theta are averaged instead.  Empty documents stay in the layout (their
    theta row is the uniform prior) but contribute no tokens.  Identical
    arguments produce bit-identical results.
    """
    if k < 2:
        raise ConfigurationError(f"need at least 2 topics, got {k}")
    if iters <= burn_in:
        raise ConfigurationError(f"iters ({iters}) must exceed burn_in ({burn_in})")
    if burn_in < 0:
        raise ConfigurationError(f"burn_in must be >= 0, got {burn_in}")
    if beta <= 0:
        raise ConfigurationError(f"beta must be positive, got {beta}")
    if alpha is None:
        alpha = default_alpha(k)
    if alpha <= 0:
        raise ConfigurationError(f"alpha must be positive, got {alpha}")
    if checkpoint_every is not None and checkpoint_every < 1:
        raise ConfigurationError("checkpoint_every must be >= 1")
    if not docs:
        raise ConfigurationError("no documents to train on")

    m = vocab.size
    term_ids, doc_offsets = _flatten_docs(docs)
    if term_ids.size == 0:
        raise ConfigurationError("all documents are empty")
    if term_ids.size and int(term_ids.max()) >= m:
        raise MismatchError(
            f"document term id {int(term_ids.max())} exceeds vocabulary size {m}"
        )
    n_empty = int(np.sum(np.diff(doc_offsets) == 0))
    if n_empty:
        log.warning("%d empty document(s) excluded from sampling", n_empty)

    n_docs = len(docs)
    z = np.empty(term_ids.size, dtype=np.int32)
    for d in range(n_docs):
        start, end = int(doc_offsets[d]), int(doc_offsets[d + 1])
        if end > start:
            u = _stream_uniforms(seed, _PURPOSE_TRAIN, d, 0, end - start)
            z[start:end] = np.minimum((u * k).astype(np.int32), k - 1)

    n_kw = np.zeros((k, m), dtype=np.int64)
    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    np.add.at(n_kw, (z, term_ids), 1)
    for d in range(n_docs):
        start, end = int(doc_offsets[d]), int(doc_offsets[d + 1])
        if end > start:
            n_dk[d] = np.bincount(z[start:end], minlength=k)
    np.add.at(n_k, z, 1)

    scores = np.empty(k, dtype=np.float64)
    uniforms = np.empty(term_ids.size, dtype=np.float64)
    lengths = np.diff(doc_offsets).astype(np.float64)
    phi_acc = np.zeros((k, m), dtype=np.float64) if average_samples else None
    theta_acc = np.zeros((n_docs, k), dtype=np.float64) if average_samples else None

    for sweep in range(1, iters + 1):
        for d in range(n_docs):
            start, end = int(doc_offsets[d]), int(doc_offsets[d + 1])
            if end > start:
                uniforms[start:end] = _stream_uniforms(
                    seed, _PURPOSE_TRAIN, d, sweep, end - start
                )
        _gibbs_sweep(
            term_ids, doc_offsets, z, n_kw, n_dk, n_k, alpha, beta, uniforms, scores
        )
        if average_samples and sweep > burn_in:
            phi_acc += (n_kw + beta) / (n_k[:, None] + m * beta)
            theta_acc += (n_dk + alpha) / (lengths[:, None] + k * alpha)
        if (
            checkpoint_every is not None
            and on_checkpoint is not None
            and sweep % checkpoint_every == 0
        ):
            on_checkpoint(
                GibbsCheckpoint(sweep, z.copy(), n_kw.copy(), n_dk.copy(), n_k.copy())
            )

    if average_samples:
        n_samples = iters - burn_in
        phi = phi_acc / n_samples
        theta = theta_acc / n_samples
    else:
        phi = (n_kw + beta) / (n_k[:, None] + m * beta)
        theta = (n_dk + alpha) / (lengths[:, None] + k * alpha)

    return TopicModel(
        k=k,
        alpha=alpha,
        beta=beta,
        iters=iters,
        burn_in=burn_in,
        seed=seed,
        vocab=vocab,
        image_ids=tuple(d.image_id for d in docs),
        term_ids=term_ids,
        doc_offsets=doc_offsets,
        z=z,
        n_kw=n_kw,
        n_dk=n_dk,
        n_k=n_k,
        phi=phi,
        theta=theta,
        average_samples=average_samples,
    )


def recount_assignments(
    term_ids: np.ndarray, doc_offsets: np.ndarray, z: np.ndarray, k: int, m: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rebuild (n_kw, n_dk, n_k) from scratch; the sampler's incremental
    bookkeeping must match this exactly after any number of sweeps."""
    n_docs = doc_offsets.shape[0] - 1
    n_kw = np.zeros((k, m), dtype=np.int64)
    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    np.add.at(n_kw, (z, term_ids), 1)
    np.add.at(n_k, z, 1)
    for d in range(n_docs):
        seg = z[doc_offsets[d] : doc_offsets[d + 1]]
        if seg.size:
            n_dk[d] = np.bincount(seg, minlength=k)
    return n_kw, n_dk, n_k


def infer_topics(
    model: TopicModel, doc: LdaDocument, iters: int = 50, seed: int = 0
) -> np.ndarray:
    """Topic distribution of a held-out document under a fixed model.

    The model's term-topic counts stay frozen; only the document's own
    assignments are Gibbs-sampled.  An empty document gets the uniform
    distribution.  Deterministic given (model, doc, iters, seed).
    """
    k = model.k
    if not doc.term_ids:
        log.warning("document %s is empty; returning uniform topics", doc.image_id)
        return np.full(k, 1.0 / k)
    term_ids = np.asarray(doc.term_ids, dtype=np.int32)
    if int(term_ids.max()) >= model.vocab.size:
        raise MismatchError(
            f"document {doc.image_id!r} uses term ids beyond the model "
            f"vocabulary (size {model.vocab.size}); was it mapped through "
            "a different vocabulary?"
        )
    if iters < 1:
        raise ConfigurationError(f"iters must be >= 1, got {iters}")

    u = _stream_uniforms(seed, _PURPOSE_INFER, 0, 0, term_ids.size)
    z = np.minimum((u * k).astype(np.int32), k - 1)
    n_dk_doc = np.bincount(z, minlength=k).astype(np.int64)
    scores = np.empty(k, dtype=np.float64)
    for sweep in range(1, iters + 1):
        uniforms = _stream_uniforms(seed, _PURPOSE_INFER, 0, sweep, term_ids.size)
        _infer_sweep(
            term_ids, z, n_dk_doc, model.n_kw, model.n_k,
            model.alpha, model.beta, uniforms, scores,
        )
    return (n_dk_doc + model.alpha) / (term_ids.size + k * model.alpha)


def top_terms(model: TopicModel, topic: int, n: int) -> list[tuple[NGram, float]]:
    """The n most probable terms of one topic, ties broken lexicographically."""
    if not 0 <= topic < model.k:
        raise ConfigurationError(f"topic {topic} out of range [0, {model.k})")
    if n < 0:
        raise ConfigurationError(f"n must be >= 0, got {n}")
    row = model.phi[topic]
    ranked = sorted(
        range(model.vocab.size), key=lambda w: (-row[w], model.vocab.terms[w].terms)
    )
    return [(model.vocab.terms[w], float(row[w])) for w in ranked[:n]]


def perplexity(
    model: TopicModel,
    heldout: Sequence[LdaDocument],
    iters: int = 50,
    seed: int = 0,
) -> float:
    """exp of the negative mean held-out log-likelihood per token.

    p(w|d) = sum_k theta_dk * phi_kw with theta_d inferred per document.
    Lower is better; a uniform model scores the vocabulary size.
    """
    total_tokens = sum(len(d.term_ids) for d in heldout)
    if total_tokens == 0:
        raise ConfigurationError("held-out set has no tokens")
    log_lik = 0.0
    for doc in heldout:
        if not doc.term_ids:
            continue
        theta_d = infer_topics(model, doc, iters=iters, seed=seed)
        w = np.asarray(doc.term_ids, dtype=np.int64)
        p = theta_d @ model.phi[:, w]
        log_lik += float(np.log(p).sum())
    return float(np.exp(-log_lik / total_tokens))
