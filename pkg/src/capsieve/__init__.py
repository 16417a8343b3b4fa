"""capsieve: clean noisy image-comment corpora into captioning datasets.

The pipeline scores each comment's informativeness from corpus n-gram
statistics, keeps comments above a threshold, pools an image's kept
comments into a document, and trains an LDA topic model whose per-image
topic distributions serve as weak labels.  Caption overlap (BLEU,
ROUGE-L, CIDEr) and diversity protocols round out the toolkit.
"""

from .config import PipelineConfig
from .corpus_io import Comment, Corpus, FilterSummary, ImageEntry, load_corpus, write_corpus, write_filtered_corpus
from .errors import (
    ArtifactFormatError,
    CapsieveError,
    ConfigurationError,
    CorpusFormatError,
    MismatchError,
)
from .lda import (
    GibbsCheckpoint,
    LdaDocument,
    LdaVocabulary,
    TopicModel,
    assemble_documents,
    build_lda_vocab,
    default_alpha,
    infer_topics,
    perplexity,
    top_terms,
    train_lda,
)
from .metrics import (
    CaptionSet,
    DiversityReport,
    bleu,
    cider,
    cider_per_image,
    distinct_caption_ratio,
    diversity_report,
    positional_unique_ngrams,
    rouge_l,
    rouge_l_per_image,
    sentence_bleu,
)
from .ngrams import NGram, VocabEntry, Vocabulary, build_vocabulary, corpus_probability, extract_ngrams
from .pipeline import prepare_corpus
from .scoring import FilterConfig, FilterDecision, filter_corpus, filter_stats, score_comment
from .textnorm import (
    Lexicon,
    TaggedToken,
    coerce_tag,
    is_noise_comment,
    normalize_text,
    pos_tag,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "ArtifactFormatError",
    "CapsieveError",
    "CaptionSet",
    "Comment",
    "ConfigurationError",
    "Corpus",
    "CorpusFormatError",
    "DiversityReport",
    "FilterConfig",
    "FilterDecision",
    "FilterSummary",
    "GibbsCheckpoint",
    "ImageEntry",
    "LdaDocument",
    "LdaVocabulary",
    "Lexicon",
    "MismatchError",
    "NGram",
    "PipelineConfig",
    "TaggedToken",
    "TopicModel",
    "VocabEntry",
    "Vocabulary",
    "assemble_documents",
    "bleu",
    "build_lda_vocab",
    "build_vocabulary",
    "cider",
    "cider_per_image",
    "coerce_tag",
    "corpus_probability",
    "default_alpha",
    "distinct_caption_ratio",
    "diversity_report",
    "extract_ngrams",
    "filter_corpus",
    "filter_stats",
    "infer_topics",
    "is_noise_comment",
    "load_corpus",
    "normalize_text",
    "perplexity",
    "pos_tag",
    "positional_unique_ngrams",
    "prepare_corpus",
    "rouge_l",
    "rouge_l_per_image",
    "score_comment",
    "sentence_bleu",
    "tokenize",
    "top_terms",
    "train_lda",
    "write_corpus",
    "write_filtered_corpus",
]
