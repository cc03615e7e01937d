from __future__ import annotations

from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator
from statsmodels.distributions.empirical_distribution import ECDF


class Measure(str, Enum):
    """Topic similarity measures."""

    MODIFIED_JACCARD = "modified_jaccard"
    COSINE = "cosine"
    AVERAGE_JACCARD = "average_jaccard"


class ModelMeasure(str, Enum):
    """Similarity measures between two whole runs."""

    SCLOP = "sclop"
    MATCHED_SHARE = "matched_share"


class ThresholdMode(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


class ThresholdConfig(BaseModel):
    """
    Lower bounds on word counts for the modified Jaccard coefficient.

    In absolute mode every topic uses ``value`` as its threshold; in relative
    mode topic i uses ``n_i / value``, where ``value`` is an integer divisor.
    """

    mode: ThresholdMode = ThresholdMode.RELATIVE
    value: float = 500

    @root_validator(skip_on_failure=True)
    def check_value(cls, values):
        mode = values["mode"]
        value = values["value"]

        if mode == ThresholdMode.RELATIVE and (value < 1 or value != int(value)):
            raise ValueError("relative thresholds need an integer divisor of at least 1")

        if mode == ThresholdMode.ABSOLUTE and value < 0:
            raise ValueError("absolute thresholds must not be negative")

        return values


class TopicCounts(BaseModel):
    """
    Sparse word counts of one topic.

    Word ids are 0-based row indices into the run's vocabulary.
    """

    counts: Dict[int, int]
    total: int
    origin: Tuple[int, int]
    vocabulary_size: int

    @root_validator(skip_on_failure=True)
    def check_total(cls, values):
        counts = values["counts"]
        if any(count < 0 for count in counts.values()):
            raise ValueError("counts must not be negative")

        if sum(counts.values()) != values["total"]:
            raise ValueError("total must equal the sum of the counts")

        return values

    @staticmethod
    def from_column(column: np.ndarray, origin: Tuple[int, int]):
        nonzero = np.flatnonzero(column)
        return TopicCounts(
            counts={int(v): int(column[v]) for v in nonzero},
            total=int(column.sum()),
            origin=origin,
            vocabulary_size=len(column),
        )

    def dense(self):
        vector = np.zeros(self.vocabulary_size, dtype=np.int64)
        for word, count in self.counts.items():
            vector[word] = count

        return vector


class SimilarityMatrix(BaseModel):
    n: int
    values: np.ndarray
    measure: Measure
    labels: List[Tuple[int, int]]
    degenerate_pairs: List[Tuple[int, int]] = Field(default_factory=list)

    class Config:
        arbitrary_types_allowed = True

    @validator("values")
    def symmetric(cls, value):
        if value.ndim != 2 or value.shape[0] != value.shape[1] or not np.array_equal(value, value.T):
            raise ValueError("similarity matrix must be square and symmetric")

        return value

    def to_distance(self):
        """``1 - s`` with an exact zero diagonal."""
        distance = 1.0 - self.values
        np.fill_diagonal(distance, 0.0)
        return distance


class ClusterGroup(BaseModel):
    members: List[Tuple[int, int]]
    t: List[int]
    disparity: float


class ClusterComposition(BaseModel):
    """
    How the topics of each run spread over the clusters of a pruning.

    ``missing_run_counts[r]`` counts the clusters of size R-1 that hold one
    topic of every run except run r.
    """

    n_clusters: int
    size_counts: Dict[int, int]
    singletons_per_run: List[int]
    missing_run_counts: List[int]


class SclopReport(BaseModel):
    groups: List[ClusterGroup]
    u_sum: float
    u_max: float
    score: float
    composition: Optional[ClusterComposition] = None


class PrototypeResult(BaseModel):
    pairwise: np.ndarray
    mean_similarity: np.ndarray
    prototype_index: int
    ranking: List[int]
    tie_note: Optional[str] = None

    class Config:
        arbitrary_types_allowed = True


class StudySample(BaseModel):
    set: int
    size: int
    kind: str
    value: float
    run: int


class StudyResult(BaseModel):
    """
    Outcome of the subsample study.

    ``prototype_indices[size][s]`` is the run index of the prototype chosen
    for set s from a subsample of ``size`` runs.
    """

    sizes: List[int]
    prototype_indices: Dict[int, List[int]]
    samples: List[StudySample]

    def sample_values(self, kind: str, size: int):
        return np.array([sample.value for sample in self.samples if sample.kind == kind and sample.size == size])

    def ecdf(self, kind: str, size: int):
        """
        The empirical CDF of the samples of one kind and subsample size.
        :return: A ``statsmodels`` ECDF.
        """
        return ECDF(self.sample_values(kind, size))
