"""Pipeline configuration: one declarative record shared by every stage.

Defaults follow the reference corpus construction: filter threshold 20,
K=200 topics, 25,000-term topic vocabulary with a 10% comment
document-frequency cap, diversity curves up to position 25 with a 3%
common-word threshold.  A config serializes to JSON; its hash is stamped
into every run manifest so artifacts can be traced to the exact settings
that produced them.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError
from .manifest import config_hash


@dataclass(frozen=True)
class PipelineConfig:
    # Corpus preparation
    pre_tagged: bool = False
    english_hit_threshold: float = 0.20
    lexicon_path: str | None = None
    stopwords_path: str | None = None
    threads: int = 1
    # Informativeness filter
    threshold: float = 20.0
    log_base: float | None = None
    min_comments_per_image: int = 1
    pooled: bool = True
    # Topic model
    topics: int = 200
    alpha: float | None = None  # None means 50/topics
    beta: float = 0.01
    iters: int = 200
    burn_in: int = 100
    seed: int = 0
    average_samples: bool = False
    infer_iters: int = 50
    vocab_cap: int = 25000
    doc_freq_cap: float = 0.10
    # Metrics
    max_positions: int = 25
    distinct_threshold: float = 0.03
    cider_length_penalty: bool = False

    def __post_init__(self) -> None:
        if not self.threshold > 0:
            raise ConfigurationError(f"threshold must be > 0, got {self.threshold}")
        if self.topics < 2:
            raise ConfigurationError(f"topics must be >= 2, got {self.topics}")
        if self.iters <= self.burn_in:
            raise ConfigurationError(
                f"iters ({self.iters}) must exceed burn_in ({self.burn_in})"
            )
        if not 0 < self.doc_freq_cap <= 1:
            raise ConfigurationError(
                f"doc_freq_cap must be in (0, 1], got {self.doc_freq_cap}"
            )
        if self.vocab_cap < 1:
            raise ConfigurationError(f"vocab_cap must be >= 1, got {self.vocab_cap}")
        if not 0 <= self.english_hit_threshold <= 1:
            raise ConfigurationError(
                f"english_hit_threshold must be in [0, 1], got "
                f"{self.english_hit_threshold}"
            )
        if self.max_positions < 1:
            raise ConfigurationError(
                f"max_positions must be >= 1, got {self.max_positions}"
            )
        if not 0 < self.distinct_threshold <= 1:
            raise ConfigurationError(
                f"distinct_threshold must be in (0, 1], got {self.distinct_threshold}"
            )
        if self.min_comments_per_image < 1:
            raise ConfigurationError(
                f"min_comments_per_image must be >= 1, got "
                f"{self.min_comments_per_image}"
            )
        if self.threads < 1:
            raise ConfigurationError(f"threads must be >= 1, got {self.threads}")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        """Load a JSON config; unknown keys fail loudly."""
        p = Path(path)
        try:
            data = json.loads(p.read_text("utf-8"))
        except OSError as e:
            raise ConfigurationError(f"cannot read config {p}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"config {p} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"config {p} must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys in {p}: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigurationError(f"bad config {p}: {e}") from e

    def updated(self, **overrides) -> "PipelineConfig":
        """Copy with every non-None override applied (CLI flag merging)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes) if changes else self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        return config_hash(self.to_dict())
