import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ComputationError
from modeling.models import RunSet
from stability.models import Measure, SimilarityMatrix, ThresholdConfig, ThresholdMode, TopicCounts


def topic_counts(runset: RunSet):
    """All N topics of a run set as TopicCounts, run-major."""
    return [
        TopicCounts.from_column(run[:, k], (r, k))
        for r, run in enumerate(runset.runs)
        for k in range(run.shape[1])
    ]


def threshold_vector(topics: Sequence[TopicCounts], cfg: ThresholdConfig) -> List[float]:
    """
    One lower bound per topic.
    :return: ``n_i / d`` for relative thresholds, ``c`` for every topic for absolute ones.
    """
    if len(topics) == 0:
        raise ComputationError("Thresholds need at least one topic")

    if cfg.mode == ThresholdMode.RELATIVE:
        return [topic.total / cfg.value for topic in topics]

    return [float(cfg.value)] * len(topics)


def modified_jaccard_sets(a: TopicCounts, b: TopicCounts, c_a: float, c_b: float):
    """
    Sizes of the thresholded intersection and union of two topics.
    :return: A tuple ``(intersection, union)``.
    """
    words_a = {word for word, count in a.counts.items() if count > c_a}
    words_b = {word for word, count in b.counts.items() if count > c_b}
    return len(words_a & words_b), len(words_a | words_b)


def modified_jaccard_with_flag(a: TopicCounts, b: TopicCounts, c_a: float, c_b: float) -> Tuple[float, bool]:
    """
    Jaccard coefficient of the words whose counts strictly exceed each topic's threshold.

    If no word of either topic exceeds its threshold the pair is degenerate
    and the similarity is 0.
    :return: A tuple ``(similarity, degenerate)``.
    """
    if c_a < 0 or c_b < 0:
        raise ComputationError("Thresholds must not be negative")

    intersection, union = modified_jaccard_sets(a, b, c_a, c_b)
    if union == 0:
        return 0.0, True

    return intersection / union, False


def modified_jaccard(a: TopicCounts, b: TopicCounts, c_a: float, c_b: float):
    similarity, degenerate = modified_jaccard_with_flag(a, b, c_a, c_b)
    if degenerate:
        logging.warning(f"Degenerate topic pair {a.origin}, {b.origin}: no word above threshold")

    return similarity


def cosine(a: Union[np.ndarray, TopicCounts], b: Union[np.ndarray, TopicCounts]):
    a = a.dense() if isinstance(a, TopicCounts) else np.asarray(a, dtype=float)
    b = b.dense() if isinstance(b, TopicCounts) else np.asarray(b, dtype=float)

    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise ComputationError("Cosine similarity is undefined for a zero vector")

    return float(np.dot(a, b) / (norm_a * norm_b))


def ranked_words(topic: TopicCounts, n: int):
    """
    The ``n`` words with the highest counts, ties broken by ascending word id.

    Words that do not occur in the topic rank after all that do.
    """
    ranked = [word for word, _ in sorted(topic.counts.items(), key=lambda item: (-item[1], item[0]))][:n]

    seen = set(ranked)
    word = 0
    while len(ranked) < min(n, topic.vocabulary_size):
        if word not in seen:
            ranked.append(word)
        word += 1

    return ranked


def average_jaccard(a: TopicCounts, b: TopicCounts, n_top: int = 5):
    """Mean Jaccard coefficient of the top-1, top-2, ..., top-``n_top`` word sets."""
    if n_top < 1:
        raise ComputationError("n_top must be at least 1")

    return _average_jaccard_ranked(ranked_words(a, n_top), ranked_words(b, n_top), n_top)


def _average_jaccard_ranked(ranked_a, ranked_b, n_top):
    total = 0.0
    for n in range(1, n_top + 1):
        top_a = set(ranked_a[:n])
        top_b = set(ranked_b[:n])
        union = top_a | top_b
        if len(union) > 0:
            total += len(top_a & top_b) / len(union)

    return total / n_top


def pairwise_similarity(runset: RunSet,
                        cfg: ThresholdConfig,
                        measure: Measure = Measure.MODIFIED_JACCARD,
                        n_top: int = 5):
    """
    Similarities of all pairs among the N topics of a run set, run-major.
    :param runset: The runs; all share one vocabulary.
    :param cfg: Thresholds for the modified Jaccard coefficient.
    :param measure: The topic similarity measure.
    :param n_top: List length for the average Jaccard coefficient.
    """
    measure = Measure(measure)
    labels = runset.labels()
    topics = runset.stacked()

    degenerate_pairs = []
    if measure == Measure.MODIFIED_JACCARD:
        values, degenerate_pairs = _modified_jaccard_matrix(topics, cfg)
    elif measure == Measure.COSINE:
        values = _cosine_matrix(topics, labels)
    else:
        ranked = [ranked_words(topic, n_top) for topic in topic_counts(runset)]
        values = np.eye(len(ranked))
        for i in range(len(ranked)):
            for j in range(i + 1, len(ranked)):
                values[i, j] = values[j, i] = _average_jaccard_ranked(ranked[i], ranked[j], n_top)

    if len(degenerate_pairs) > 0:
        logging.warning(f"{len(degenerate_pairs)} topic pairs have no word above their thresholds")

    return SimilarityMatrix(
        n=len(labels),
        values=values,
        measure=measure,
        labels=labels,
        degenerate_pairs=degenerate_pairs,
    )


def _modified_jaccard_matrix(topics: np.ndarray, cfg: ThresholdConfig):
    totals = topics.sum(axis=0)
    if cfg.mode == ThresholdMode.RELATIVE:
        thresholds = totals / cfg.value
    else:
        thresholds = np.full(topics.shape[1], float(cfg.value))

    above = (topics > thresholds[np.newaxis, :]).astype(np.int64)
    intersection = above.T @ above
    sizes = above.sum(axis=0)
    union = sizes[:, np.newaxis] + sizes[np.newaxis, :] - intersection

    values = np.zeros(intersection.shape)
    np.divide(intersection, union, out=values, where=union > 0)

    rows, columns = np.nonzero(np.triu(union == 0))
    return values, [(int(i), int(j)) for i, j in zip(rows, columns)]


def _cosine_matrix(topics: np.ndarray, labels):
    topics = topics.astype(float)
    norms = np.linalg.norm(topics, axis=0)

    empty = np.flatnonzero(norms == 0)
    if len(empty) > 0:
        run, topic = labels[empty[0]]
        raise ComputationError(f"Cosine similarity is undefined for empty topic {run + 1}.{topic + 1}")

    normalized = topics / norms
    values = normalized.T @ normalized
    values = np.clip((values + values.T) / 2, 0.0, 1.0)
    np.fill_diagonal(values, 1.0)
    return values


def word_importance(z: np.ndarray, epsilon: float = 1e-5):
    """
    Importance of every word for every topic of one run.

    ``I(v, k) = p * (log(p + eps) - mean_l log(p_l + eps))`` with
    ``p = n_k^(v) / n_k``: words score high when they are frequent in topic
    k but rare on average over all topics.
    :param z: The V×K count matrix of a run.
    :param epsilon: Keeps the logarithms finite.
    :return: A V×K matrix.
    """
    if epsilon <= 0:
        raise ComputationError("epsilon must be positive")

    totals = z.sum(axis=0)
    empty = np.flatnonzero(totals == 0)
    if len(empty) > 0:
        raise ComputationError(f"Topic {empty[0] + 1} has no assigned words")

    shares = z / totals
    logs = np.log(shares + epsilon)
    return shares * (logs - logs.mean(axis=1, keepdims=True))


def top_words(importance: np.ndarray, k: int, n: int, vocabulary: Optional[Sequence[str]] = None):
    """
    The ``n`` most important words of topic ``k``, ties broken by ascending word id.
    :return: Word ids, or the words themselves if a vocabulary is given.
    """
    scores = importance[:, k]
    order = np.lexsort((np.arange(len(scores)), -scores))[:n]

    if vocabulary is None:
        return [int(v) for v in order]

    return [vocabulary[v] for v in order]


def topic_top_words(runset: RunSet, n: int = 3):
    """
    The ``n`` most important words of every topic, keyed by (run, topic).

    Runs with an empty topic get no words.
    """
    words = {}
    for r, run in enumerate(runset.runs):
        try:
            importance = word_importance(run)
        except ComputationError as e:
            logging.warning(f"No top words for run {r + 1}: {e}")
            continue

        for k in range(run.shape[1]):
            words[(r, k)] = top_words(importance, k, n, runset.vocabulary)

    return words


def matched_share(run_a: np.ndarray, run_b: np.ndarray, threshold: float = 0.7):
    """
    Share of topics whose best cosine match in the other run exceeds ``threshold``.

    The shares of both directions are averaged so the result is symmetric.
    Empty topics match nothing.
    """
    if run_a.shape != run_b.shape:
        raise ComputationError("Both runs need the same vocabulary and number of topics")

    def normalize(run):
        norms = np.linalg.norm(run, axis=0)
        return np.divide(run, norms, out=np.zeros(run.shape), where=norms > 0)

    values = normalize(run_a.astype(float)).T @ normalize(run_b.astype(float))
    share_a = np.mean(values.max(axis=1) > threshold)
    share_b = np.mean(values.max(axis=0) > threshold)
    return float((share_a + share_b) / 2)
