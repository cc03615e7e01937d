import asyncio
import concurrent.futures
import functools
import logging
from typing import List

import numpy as np

from errors import ComputationError
from modeling.models import AssignmentState, Corpus, LdaConfig, RunSet

MASK64 = (1 << 64) - 1


def derive_seeds(master_seed: int, count: int) -> List[int]:
    """
    Derives per-run seeds from a master seed with the splitmix64 sequence.
    :param master_seed: Any integer; it is reduced modulo 2**64.
    :param count: The number of seeds.
    :return: ``count`` unsigned 64-bit seeds.
    """
    state = master_seed & MASK64
    seeds = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        seeds.append(z ^ (z >> 31))

    return seeds


class CollapsedGibbsSampler:
    """
    Collapsed Gibbs sampler for LDA.

    Random numbers come from numpy's PCG64 generator seeded with ``cfg.seed``.
    Topic ids are 0-based. A token's topic is resampled with weights
    ``(n_wk + beta) / (n_k + V*beta) * (n_dk + alpha)``, where all counts
    exclude the token itself.
    """

    def __init__(self, corpus: Corpus, cfg: LdaConfig, check_invariants: bool = False):
        if len(corpus.documents) == 0:
            raise ComputationError("Cannot fit LDA on an empty corpus")

        lengths = [len(tokens) for tokens in corpus.documents]
        if min(lengths) == 0:
            empty = corpus.doc_ids[lengths.index(0)]
            raise ComputationError(f"Document {empty} has no tokens")

        self.__cfg = cfg
        self.__check_invariants = check_invariants
        self.__vocabulary_size = corpus.vocabulary_size
        self.__offsets = np.concatenate([[0], np.cumsum(lengths)])

        words = np.concatenate([np.asarray(tokens, dtype=np.int64) - 1 for tokens in corpus.documents])
        docs = np.repeat(np.arange(len(lengths)), lengths)

        self.__words = words.tolist()
        self.__docs = docs.tolist()
        self.__rng = np.random.Generator(np.random.PCG64(cfg.seed))
        self.__topics = self.__rng.integers(0, cfg.K, size=len(words))

        self.__doc_topic = np.zeros((len(lengths), cfg.K), dtype=np.int64)
        np.add.at(self.__doc_topic, (docs, self.__topics), 1)
        self.__word_topic = np.zeros((self.__vocabulary_size, cfg.K), dtype=np.int64)
        np.add.at(self.__word_topic, (words, self.__topics), 1)
        self.__totals = np.bincount(self.__topics, minlength=cfg.K).astype(np.int64)

    def sweep(self):
        """Resamples the topic of every token once, in corpus order."""
        alpha = self.__cfg.alpha
        beta = self.__cfg.beta
        vocabulary_beta = self.__vocabulary_size * beta
        last_topic = self.__cfg.K - 1

        doc_topic = self.__doc_topic
        word_topic = self.__word_topic
        totals = self.__totals
        topics = self.__topics
        uniforms = self.__rng.random(len(topics))

        for i, (w, d) in enumerate(zip(self.__words, self.__docs)):
            k = topics[i]
            doc_topic[d, k] -= 1
            word_topic[w, k] -= 1
            totals[k] -= 1

            weights = (word_topic[w] + beta) / (totals + vocabulary_beta) * (doc_topic[d] + alpha)
            cumulative = np.cumsum(weights)
            k = min(int(np.searchsorted(cumulative, uniforms[i] * cumulative[-1], side="right")), last_topic)

            doc_topic[d, k] += 1
            word_topic[w, k] += 1
            totals[k] += 1
            topics[i] = k

    def run(self):
        for iteration in range(self.__cfg.iterations):
            self.sweep()

            if self.__check_invariants:
                problems = self.state().violations()
                if len(problems) > 0:
                    raise ComputationError(f"Sweep {iteration + 1}: " + "; ".join(problems))

            logging.debug(f"Finished sweep {iteration + 1}/{self.__cfg.iterations}")

        return self.state()

    def state(self):
        return AssignmentState(
            assignments=[
                self.__topics[start:end].copy() for start, end in zip(self.__offsets[:-1], self.__offsets[1:])
            ],
            doc_topic_counts=self.__doc_topic.copy(),
            topic_word_counts=self.__word_topic.copy(),
            topic_totals=self.__totals.copy(),
        )


def fit_lda(corpus: Corpus, cfg: LdaConfig, check_invariants: bool = False):
    """
    Fits LDA with ``cfg.iterations`` sweeps of the collapsed Gibbs sampler.
    :return: The final AssignmentState.
    """
    return CollapsedGibbsSampler(corpus, cfg, check_invariants).run()


def count_matrix(state: AssignmentState):
    """The V×K matrix of word counts per topic."""
    return state.topic_word_counts.copy()


def _fit_counts(corpus: Corpus, cfg: LdaConfig, check_invariants: bool):
    return count_matrix(fit_lda(corpus, cfg, check_invariants))


def _run_configs(cfg: LdaConfig, R: int, master_seed: int):
    if R < 1:
        raise ComputationError("At least one replication is required")

    seeds = derive_seeds(master_seed, R)
    return seeds, [cfg.copy(update={"seed": seed}) for seed in seeds]


def replicate(corpus: Corpus, cfg: LdaConfig, R: int, master_seed: int, check_invariants: bool = False):
    """
    Fits ``R`` independent LDA runs with seeds derived from ``master_seed``.
    :return: The RunSet, in replication order.
    """
    seeds, configs = _run_configs(cfg, R, master_seed)

    runs = []
    for index, run_cfg in enumerate(configs):
        logging.info(f"Fitting run {index + 1}/{R} (seed={run_cfg.seed})")
        runs.append(_fit_counts(corpus, run_cfg, check_invariants))

    return RunSet(runs=runs, vocabulary=corpus.vocabulary, configs=configs, seeds=seeds)


async def replicate_async(corpus: Corpus,
                          cfg: LdaConfig,
                          R: int,
                          master_seed: int,
                          executor: concurrent.futures.Executor,
                          check_invariants: bool = False):
    """Like :func:`replicate`, but runs the fits on ``executor``."""
    seeds, configs = _run_configs(cfg, R, master_seed)
    loop = asyncio.get_event_loop()

    logging.info(f"Fitting {R} runs with K={cfg.K}, {cfg.iterations} iterations")
    runs = await asyncio.gather(*(
        loop.run_in_executor(executor, functools.partial(_fit_counts, corpus, run_cfg, check_invariants))
        for run_cfg in configs
    ))
    logging.info(f"Fitted {R} runs")

    return RunSet(runs=list(runs), vocabulary=corpus.vocabulary, configs=configs, seeds=seeds)
