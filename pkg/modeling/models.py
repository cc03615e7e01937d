from __future__ import annotations

from typing import Any, Dict, FrozenSet, List, Optional

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator


class RawDocument(BaseModel):
    """A source document before preprocessing."""

    id: str
    text: str
    meta: Dict[str, Any] = Field(default_factory=dict)

    @validator("id")
    def id_not_empty(cls, value):
        if value == "":
            raise ValueError("document id must not be empty")

        return value


class PreprocessConfig(BaseModel):
    lowercase: bool = True
    strip_numbers: bool = True
    strip_punctuation: bool = True
    stopword_list: FrozenSet[str] = frozenset()
    min_word_count: int = 6
    deduplicate: bool = True

    @validator("min_word_count")
    def min_word_count_positive(cls, value):
        if value < 1:
            raise ValueError("min_word_count must be at least 1")

        return value


class FilterReport(BaseModel):
    """Records what preprocessing removed from a document collection."""

    removed_duplicates: List[str] = Field(default_factory=list)
    dropped_documents: List[str] = Field(default_factory=list)
    raw_vocabulary_size: int = 0
    vocabulary_size: int = 0
    token_count: int = 0


class Corpus(BaseModel):
    """
    A tokenized corpus.

    Token ids are 1-based indices into ``vocabulary``, which is sorted
    lexicographically.
    """

    documents: List[List[int]]
    vocabulary: List[str]
    doc_ids: List[str]

    @root_validator(skip_on_failure=True)
    def check_consistency(cls, values):
        documents = values["documents"]
        vocabulary = values["vocabulary"]
        doc_ids = values["doc_ids"]

        if len(documents) != len(doc_ids):
            raise ValueError("documents and doc_ids must have the same length")

        if any(a >= b for a, b in zip(vocabulary, vocabulary[1:])):
            raise ValueError("vocabulary must be distinct and sorted")

        size = len(vocabulary)
        for doc_id, tokens in zip(doc_ids, documents):
            if any(token < 1 or token > size for token in tokens):
                raise ValueError(f"document {doc_id} has a token id outside [1, {size}]")

        return values

    @property
    def vocabulary_size(self):
        return len(self.vocabulary)

    @property
    def token_count(self):
        return sum(len(tokens) for tokens in self.documents)

    def render(self):
        """Renders every document back to whitespace-separated text."""
        return [
            RawDocument(id=doc_id, text=" ".join(self.vocabulary[token - 1] for token in tokens))
            for doc_id, tokens in zip(self.doc_ids, self.documents)
        ]


class LdaConfig(BaseModel):
    """
    Parameters of one LDA fit.

    ``alpha`` and ``beta`` default to ``1/K``.
    """

    K: int = 50
    alpha: Optional[float] = None
    beta: Optional[float] = None
    iterations: int = 270
    seed: int = 0

    @validator("K")
    def k_positive(cls, value):
        if value < 1:
            raise ValueError("K must be at least 1")

        return value

    @validator("alpha", "beta", always=True)
    def prior_positive(cls, value, values, field):
        if value is None:
            if "K" not in values:
                raise ValueError(f"{field.name} needs a valid K for its default")
            return 1.0 / values["K"]

        if value <= 0:
            raise ValueError(f"{field.name} must be positive")

        return value

    @validator("iterations")
    def iterations_positive(cls, value):
        if value < 1:
            raise ValueError("iterations must be at least 1")

        return value

    @validator("seed")
    def seed_fits_64_bits(cls, value):
        if value < 0 or value >= 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

        return value


class AssignmentState(BaseModel):
    """The state of a collapsed Gibbs sampler after some number of sweeps."""

    assignments: List[np.ndarray]
    doc_topic_counts: np.ndarray
    topic_word_counts: np.ndarray
    topic_totals: np.ndarray

    class Config:
        arbitrary_types_allowed = True

    def violations(self):
        """
        Lists every broken count-conservation invariant.
        :return: A list of human readable descriptions, empty if the state is consistent.
        """
        problems = []

        lengths = np.array([len(topics) for topics in self.assignments])
        if not np.array_equal(self.doc_topic_counts.sum(axis=1), lengths):
            problems.append("document-topic rows do not sum to the document lengths")

        if not np.array_equal(self.topic_word_counts.sum(axis=0), self.topic_totals):
            problems.append("topic-word columns do not sum to the topic totals")

        if int(self.topic_totals.sum()) != int(lengths.sum()):
            problems.append("topic totals do not sum to the token count")

        return problems


class RunSet(BaseModel):
    """R replicated LDA runs over one corpus, each a V×K count matrix."""

    runs: List[np.ndarray]
    vocabulary: List[str]
    configs: List[LdaConfig]
    seeds: List[int]

    class Config:
        arbitrary_types_allowed = True

    @root_validator(skip_on_failure=True)
    def check_shapes(cls, values):
        runs = values["runs"]
        if len(runs) < 1:
            raise ValueError("a run set needs at least one run")

        if len(values["configs"]) != len(runs) or len(values["seeds"]) != len(runs):
            raise ValueError("runs, configs and seeds must have the same length")

        shape = (len(values["vocabulary"]), runs[0].shape[1] if runs[0].ndim == 2 else -1)
        for index, run in enumerate(runs):
            if run.ndim != 2 or run.shape != shape:
                raise ValueError(f"run {index} has shape {run.shape}, expected {shape}")

        return values

    @property
    def R(self):
        return len(self.runs)

    @property
    def K(self):
        return self.runs[0].shape[1]

    @property
    def V(self):
        return len(self.vocabulary)

    @property
    def N(self):
        return self.R * self.K

    def stacked(self):
        """The V×N matrix of all topics, run-major."""
        return np.hstack(self.runs)

    def labels(self):
        """(run, topic) pairs of all N topics, 0-based, run-major."""
        return [(r, k) for r in range(self.R) for k in range(self.K)]

    def subset(self, indices: List[int]):
        return RunSet(
            runs=[self.runs[i] for i in indices],
            vocabulary=self.vocabulary,
            configs=[self.configs[i] for i in indices],
            seeds=[self.seeds[i] for i in indices],
        )


class SyntheticSpec(BaseModel):
    """Parameters of a generated corpus with known topic structure."""

    n_true_topics: int = 5
    vocab_size: int = 200
    docs: int = 100
    doc_length: int = 50
    topic_concentration: float = 0.1
    noise_rate: float = 0.0
    seed: int = 0

    @validator("n_true_topics", "vocab_size", "docs", "doc_length")
    def positive(cls, value, field):
        if value < 1:
            raise ValueError(f"{field.name} must be positive")

        return value

    @validator("topic_concentration")
    def concentration_positive(cls, value):
        if value <= 0:
            raise ValueError("topic_concentration must be positive")

        return value

    @validator("noise_rate")
    def noise_rate_in_range(cls, value):
        if not 0 <= value < 1:
            raise ValueError("noise_rate must lie in [0, 1)")

        return value

    @validator("vocab_size")
    def vocabulary_covers_topics(cls, value, values):
        if "n_true_topics" in values and value < values["n_true_topics"]:
            raise ValueError("vocab_size must be at least n_true_topics")

        return value

    @validator("seed")
    def seed_not_negative(cls, value):
        if value < 0:
            raise ValueError("seed must not be negative")

        return value
