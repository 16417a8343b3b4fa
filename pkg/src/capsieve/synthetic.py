"""Synthetic planted-topic corpora for validating the Gibbs sampler.

The generators build a term-topic matrix with disjoint per-topic word
supports, draw documents from the LDA generative process, and match
recovered topics back to planted ones by greedy cosine assignment.  All
draws use an explicitly seeded generator, so fixtures are reproducible.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .lda import LdaDocument


def planted_phi(n_topics: int = 5, vocab_size: int = 100, support: int = 20) -> np.ndarray:
    """Term-topic matrix with disjoint supports of ``support`` words each.

    Within a support, probabilities decrease linearly so every topic has
    a unique most-probable word (word index topic*support).
    """
    if n_topics * support > vocab_size:
        raise ConfigurationError(
            f"{n_topics} topics x {support} support words exceed vocabulary "
            f"size {vocab_size}"
        )
    phi = np.zeros((n_topics, vocab_size))
    weights = np.arange(support, 0, -1, dtype=np.float64)
    weights /= weights.sum()
    for k in range(n_topics):
        phi[k, k * support : (k + 1) * support] = weights
    return phi


def sample_docs(
    phi: np.ndarray,
    n_docs: int,
    doc_len: int,
    alpha: float = 0.1,
    seed: int = 0,
) -> tuple[list[LdaDocument], np.ndarray]:
    """Draw documents from the LDA generative process with known phi.

    Returns the documents and the true document-topic proportions.  A
    small ``alpha`` concentrates each document on few topics, which keeps
    the planted structure recoverable.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    n_topics = phi.shape[0]
    theta = rng.dirichlet(np.full(n_topics, alpha), size=n_docs)
    docs = []
    for d in range(n_docs):
        topics = rng.choice(n_topics, size=doc_len, p=theta[d])
        words = [int(rng.choice(phi.shape[1], p=phi[k])) for k in topics]
        docs.append(LdaDocument(f"syn{d:05d}", tuple(words)))
    return docs, theta


def sample_single_topic_docs(
    phi: np.ndarray, topics: list[int], doc_len: int, seed: int = 0
) -> list[LdaDocument]:
    """Documents drawn purely from one planted topic each."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    docs = []
    for d, k in enumerate(topics):
        words = rng.choice(phi.shape[1], size=doc_len, p=phi[k])
        docs.append(LdaDocument(f"held{d:05d}", tuple(int(w) for w in words)))
    return docs


def match_topics(
    phi_true: np.ndarray, phi_est: np.ndarray
) -> tuple[dict[int, int], float]:
    """Greedy one-to-one matching of planted to recovered topics.

    Repeatedly pairs the highest-cosine (true, estimated) topics until
    every planted topic is matched.  Returns the mapping and the mean
    cosine over matched pairs.
    """

    def _unit(m: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(m, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return m / norms

    sims = _unit(phi_true) @ _unit(phi_est).T
    mapping: dict[int, int] = {}
    used_true: set[int] = set()
    used_est: set[int] = set()
    order = np.dstack(np.unravel_index(np.argsort(-sims, axis=None), sims.shape))[0]
    for i, j in order:
        if int(i) in used_true or int(j) in used_est:
            continue
        mapping[int(i)] = int(j)
        used_true.add(int(i))
        used_est.add(int(j))
        if len(mapping) == phi_true.shape[0]:
            break
    mean_cosine = float(np.mean([sims[i, j] for i, j in mapping.items()]))
    return mapping, mean_cosine
