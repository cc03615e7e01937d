import logging
import string

import numpy as np

from modeling.corpus import CorpusPreprocessor
from modeling.models import PreprocessConfig, RawDocument, SyntheticSpec


class SyntheticCorpusGenerator:
    """
    Generates documents from a known topic structure.

    Every true topic owns a disjoint block of the vocabulary with Zipf-like
    word weights inside the block. A document draws its topic mixture from a
    symmetric Dirichlet distribution; each token is either noise (a uniform
    word from the whole vocabulary, with probability ``noise_rate``) or a
    word of a topic drawn from the mixture.
    """

    def __init__(self, spec: SyntheticSpec):
        self.__spec = spec
        self.__block_size = spec.vocab_size // spec.n_true_topics
        self.__words = SyntheticCorpusGenerator.word_forms(spec.vocab_size)

        weights = 1.0 / np.arange(1, self.__block_size + 1)
        self.__block_weights = weights / weights.sum()

    @staticmethod
    def word_forms(count: int):
        """Distinct, lexicographically ordered, letter-only words."""
        width = 1
        while len(string.ascii_lowercase) ** width < count:
            width += 1

        words = []
        for index in range(count):
            letters = []
            for _ in range(width):
                index, remainder = divmod(index, len(string.ascii_lowercase))
                letters.append(string.ascii_lowercase[remainder])
            words.append("w" + "".join(reversed(letters)))

        return words

    def documents(self):
        spec = self.__spec
        rng = np.random.Generator(np.random.PCG64(spec.seed))

        docs = []
        for index in range(spec.docs):
            mixture = rng.gamma(spec.topic_concentration, size=spec.n_true_topics)
            if mixture.sum() <= 0 or not np.isfinite(mixture.sum()):
                mixture = np.zeros(spec.n_true_topics)
                mixture[rng.integers(spec.n_true_topics)] = 1.0
            mixture = mixture / mixture.sum()

            topics = rng.choice(spec.n_true_topics, size=spec.doc_length, p=mixture)
            offsets = rng.choice(self.__block_size, size=spec.doc_length, p=self.__block_weights)
            word_ids = topics * self.__block_size + offsets

            noise = rng.random(spec.doc_length) < spec.noise_rate
            word_ids[noise] = rng.integers(0, spec.vocab_size, size=int(noise.sum()))

            docs.append(RawDocument(id=f"doc{index:05d}", text=" ".join(self.__words[w] for w in word_ids)))

        return docs

    def corpus(self):
        docs = self.documents()
        logging.info(f"Generated {len(docs)} synthetic documents over {self.__spec.n_true_topics} topics")

        cfg = PreprocessConfig(min_word_count=1, deduplicate=False)
        return CorpusPreprocessor.preprocess(docs, cfg)
