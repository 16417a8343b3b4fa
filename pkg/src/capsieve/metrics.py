"""Caption overlap metrics and diversity protocols.

Accuracy side: corpus-level BLEU-1..4 (clipped n-gram precision with
brevity penalty), ROUGE-L (LCS F-measure, best reference per image,
averaged over images), and CIDEr (TF-IDF n-gram cosine averaged over
references and n = 1..4, scaled by 10; the Gaussian length penalty is
off by default).

Diversity side: the number of unique n-grams (n in {1, 2, 4}) occupying
each token position across a caption set, and the fraction of distinct
captions under a common-word-ratio criterion with greedy representative
clustering.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ConfigurationError, MismatchError

TokenList = tuple[str, ...]

DEFAULT_MAX_POSITIONS = 25
DEFAULT_DISTINCT_THRESHOLD = 0.03
DIVERSITY_ORDERS = (1, 2, 4)


@dataclass(frozen=True)
class CaptionSet:
    """Aligned candidate and reference captions, keyed by image id.

    Tokens are lowercased on construction.  Every candidate image must
    have at least one non-empty reference.
    """

    candidates: Mapping[str, TokenList]
    references: Mapping[str, tuple[TokenList, ...]]

    def __post_init__(self) -> None:
        cands = {
            str(iid): tuple(t.lower() for t in toks)
            for iid, toks in self.candidates.items()
        }
        refs = {
            str(iid): tuple(tuple(t.lower() for t in r) for r in rlist)
            for iid, rlist in self.references.items()
        }
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "references", refs)
        for iid in cands:
            rlist = refs.get(iid)
            if not rlist:
                raise MismatchError(f"image {iid!r} has a candidate but no references")
            if any(len(r) == 0 for r in rlist):
                raise MismatchError(f"image {iid!r} has an empty reference caption")

    @property
    def image_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.candidates))

    @property
    def n_images(self) -> int:
        return len(self.candidates)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(caption_set: CaptionSet, max_n: int = 4) -> tuple[float, ...]:
    """Corpus-level BLEU-1..max_n.

    Clipped n-gram matches and totals are pooled over all images before
    the precision division; the brevity penalty uses the
    closest-in-length reference per image (ties to the shorter).  BLEU-n
    combines orders 1..n with uniform 1/n weights and no smoothing, so a
    zero precision at any order zeroes the score.
    """
    if caption_set.n_images == 0:
        raise ConfigurationError("empty candidate set")
    clipped = [0] * max_n
    totals = [0] * max_n
    cand_len = 0
    ref_len = 0
    for iid in caption_set.image_ids:
        cand = caption_set.candidates[iid]
        refs = caption_set.references[iid]
        cand_len += len(cand)
        ref_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for n in range(1, max_n + 1):
            counts = _ngram_counts(cand, n)
            if not counts:
                continue
            max_ref: Counter = Counter()
            for r in refs:
                max_ref |= _ngram_counts(r, n)
            clipped[n - 1] += sum(min(c, max_ref[g]) for g, c in counts.items())
            totals[n - 1] += sum(counts.values())
    if cand_len == 0:
        return (0.0,) * max_n
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    precisions = [
        (clipped[i] / totals[i]) if totals[i] else 0.0 for i in range(max_n)
    ]
    scores = []
    for n in range(1, max_n + 1):
        if any(p == 0.0 for p in precisions[:n]):
            scores.append(0.0)
        else:
            scores.append(bp * math.exp(sum(math.log(p) for p in precisions[:n]) / n))
    return tuple(scores)


def sentence_bleu(
    candidate: Sequence[str], references: Sequence[Sequence[str]], max_n: int = 4
) -> tuple[float, ...]:
    """BLEU-1..max_n of a single caption (a one-image corpus)."""
    cs = CaptionSet({"_": tuple(candidate)}, {"_": tuple(tuple(r) for r in references)})
    return bleu(cs, max_n=max_n)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l_per_image(caption_set: CaptionSet, beta: float = 1.2) -> dict[str, float]:
    """Per-image ROUGE-L: the best F-measure over that image's references."""
    out: dict[str, float] = {}
    bsq = beta * beta
    for iid in caption_set.image_ids:
        cand = caption_set.candidates[iid]
        best = 0.0
        for ref in caption_set.references[iid]:
            lcs = _lcs_length(cand, ref)
            if lcs == 0 or not cand:
                continue
            rec = lcs / len(ref)
            prec = lcs / len(cand)
            f = (1 + bsq) * rec * prec / (rec + bsq * prec)
            best = max(best, f)
        out[iid] = best
    return out


def rouge_l(caption_set: CaptionSet, beta: float = 1.2) -> float:
    """Mean per-image ROUGE-L over the caption set."""
    if caption_set.n_images == 0:
        raise ConfigurationError("empty candidate set")
    per_image = rouge_l_per_image(caption_set, beta=beta)
    return sum(per_image.values()) / len(per_image)


def _tfidf_vector(
    counts: Counter, idf: Mapping[tuple[str, ...], float], default_idf: float
) -> tuple[dict, float]:
    vec = {g: c * idf.get(g, default_idf) for g, c in counts.items()}
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return vec, norm


def _cosine(a: tuple[dict, float], b: tuple[dict, float]) -> float:
    va, na = a
    vb, nb = b
    if na == 0.0 or nb == 0.0:
        return 0.0
    small, large = (va, vb) if len(va) <= len(vb) else (vb, va)
    dot = sum(v * large.get(g, 0.0) for g, v in small.items())
    return dot / (na * nb)


def cider_per_image(
    caption_set: CaptionSet,
    max_n: int = 4,
    length_penalty: bool = False,
    sigma: float = 6.0,
) -> dict[str, float]:
    """Per-image CIDEr in [0, 10].

    For each n, candidate and references become TF-IDF vectors (raw
    term frequency; IDF = ln(#images / #reference-sets containing the
    n-gram), document frequency clamped to 1 so never-seen n-grams carry
    the maximum IDF).  The per-image score averages the cosine over
    references and over n, times 10.  ``length_penalty`` additionally
    damps each cosine by exp(-(len_c - len_r)^2 / (2 sigma^2)).
    """
    n_images = len(caption_set.references)
    if n_images < 2:
        raise ConfigurationError(
            "CIDEr needs at least 2 images; IDF is degenerate on one image"
        )
    log_n = math.log(n_images)

    doc_freq: list[Counter] = [Counter() for _ in range(max_n)]
    for iid in sorted(caption_set.references):
        for n in range(1, max_n + 1):
            seen: set = set()
            for ref in caption_set.references[iid]:
                seen.update(_ngram_counts(ref, n))
            for g in seen:
                doc_freq[n - 1][g] += 1

    idfs = [
        {g: log_n - math.log(df) for g, df in doc_freq[n - 1].items()}
        for n in range(1, max_n + 1)
    ]

    out: dict[str, float] = {}
    for iid in caption_set.image_ids:
        cand = caption_set.candidates[iid]
        refs = caption_set.references[iid]
        total = 0.0
        for n in range(1, max_n + 1):
            idf = idfs[n - 1]
            cand_vec = _tfidf_vector(_ngram_counts(cand, n), idf, log_n)
            sim_sum = 0.0
            for ref in refs:
                ref_vec = _tfidf_vector(_ngram_counts(ref, n), idf, log_n)
                sim = _cosine(cand_vec, ref_vec)
                if length_penalty:
                    sim *= math.exp(-((len(cand) - len(ref)) ** 2) / (2 * sigma * sigma))
                sim_sum += sim
            total += sim_sum / len(refs)
        out[iid] = 10.0 * total / max_n
    return out


def cider(
    caption_set: CaptionSet,
    max_n: int = 4,
    length_penalty: bool = False,
    sigma: float = 6.0,
) -> float:
    """Corpus CIDEr: mean of the per-image scores."""
    if caption_set.n_images == 0:
        raise ConfigurationError("empty candidate set")
    per_image = cider_per_image(
        caption_set, max_n=max_n, length_penalty=length_penalty, sigma=sigma
    )
    return sum(per_image.values()) / len(per_image)


def positional_unique_ngrams(
    candidates: Sequence[Sequence[str]], n: int, max_pos: int = DEFAULT_MAX_POSITIONS
) -> list[int]:
    """Distinct n-grams starting at each token position (1-indexed).

    Position p covers tokens p..p+n-1; captions too short to fill that
    window contribute nothing there.  Identical captions therefore give
    a flat count of 1 over their length.
    """
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    if max_pos < 1:
        raise ConfigurationError(f"max_pos must be >= 1, got {max_pos}")
    counts = []
    for p in range(1, max_pos + 1):
        seen: set = set()
        for cap in candidates:
            if len(cap) >= p + n - 1:
                seen.add(tuple(cap[p - 1 : p - 1 + n]))
        counts.append(len(seen))
    return counts


def _common_word_ratio(a: frozenset, b: frozenset, denominator: str) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    denom = max(len(a), len(b)) if denominator == "max" else min(len(a), len(b))
    return len(a & b) / denom


def distinct_caption_ratio(
    candidates: Sequence[Sequence[str]],
    overlap_threshold: float = DEFAULT_DISTINCT_THRESHOLD,
    denominator: str = "max",
) -> float:
    """Fraction of effectively-distinct captions in the set.

    Two captions count as the same when their common-word ratio
    (|A∩B| over the larger word set by default) reaches the threshold.
    Captions are scanned in input order: each joins the first cluster
    whose representative it matches, else founds a new cluster; the
    result is #clusters / #captions.  Order-dependent by design.
    """
    if len(candidates) < 2:
        raise ConfigurationError("distinct-caption ratio needs at least 2 captions")
    if denominator not in ("max", "min"):
        raise ConfigurationError(f"denominator must be 'max' or 'min', got {denominator!r}")
    representatives: list[frozenset] = []
    for cap in candidates:
        words = frozenset(cap)
        for rep in representatives:
            if _common_word_ratio(words, rep, denominator) >= overlap_threshold:
                break
        else:
            representatives.append(words)
    return len(representatives) / len(candidates)


@dataclass(frozen=True)
class DiversityReport:
    """Positional unique-n-gram curves plus the distinct-caption ratio."""

    per_position: Mapping[int, tuple[int, ...]]
    distinct_ratio: float
    max_pos: int
    n_captions: int


def diversity_report(
    candidates: Sequence[Sequence[str]],
    max_pos: int = DEFAULT_MAX_POSITIONS,
    overlap_threshold: float = DEFAULT_DISTINCT_THRESHOLD,
    orders: Iterable[int] = DIVERSITY_ORDERS,
) -> DiversityReport:
    """Bundle the diversity protocols over one candidate caption set."""
    per_position = {
        n: tuple(positional_unique_ngrams(candidates, n, max_pos)) for n in orders
    }
    return DiversityReport(
        per_position=per_position,
        distinct_ratio=distinct_caption_ratio(candidates, overlap_threshold),
        max_pos=max_pos,
        n_captions=len(candidates),
    )
