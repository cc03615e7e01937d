import numpy as np
import pytest

from config import Config
from modeling.models import Corpus, LdaConfig, RunSet
from stability.models import TopicCounts

TABLE_WORDS = [
    "trump", "trumps", "president", "donald", "news", "said",
    "election", "will", "women", "debate", "sarcastic",
]
TABLE_COUNTS = [
    (1668, 2860), (446, 854), (91, 876), (259, 693), (695, 0), (500, 0),
    (8, 474), (0, 462), (397, 53), (394, 11), (1, 4),
]


@pytest.fixture(autouse=True)
def reset_config():
    Config.reset()
    yield
    Config.reset()


@pytest.fixture
def table_counts():
    """The two-topic toy example: counts of eleven words in topics z1 and z2."""
    return np.array(TABLE_COUNTS, dtype=np.int64)


@pytest.fixture
def table_topics(table_counts):
    return (
        TopicCounts.from_column(table_counts[:, 0], (0, 0)),
        TopicCounts.from_column(table_counts[:, 1], (1, 0)),
    )


@pytest.fixture
def make_runset():
    def make(runs):
        runs = [np.asarray(run, dtype=np.int64) for run in runs]
        vocabulary = [f"w{v:04d}" for v in range(runs[0].shape[0])]
        configs = [LdaConfig(K=runs[0].shape[1])] * len(runs)
        return RunSet(runs=runs, vocabulary=vocabulary, configs=configs, seeds=list(range(len(runs))))

    return make


@pytest.fixture
def block_run():
    """A V×K run whose topics own disjoint blocks of ``size`` words with 100 counts each."""
    def make(K, size=4, order=None):
        order = list(range(K)) if order is None else order
        run = np.zeros((K * size, K), dtype=np.int64)
        for k, block in enumerate(order):
            run[block * size:(block + 1) * size, k] = 100

        return run

    return make


@pytest.fixture
def separable_corpus():
    """Two groups of documents over disjoint vocabularies: words 1-5 and 6-10."""
    rng = np.random.default_rng(7)
    documents = []
    for index in range(20):
        low = 1 if index % 2 == 0 else 6
        documents.append([int(token) for token in rng.integers(low, low + 5, size=20)])

    vocabulary = [f"word{v:02d}" for v in range(10)]
    return Corpus(documents=documents, vocabulary=vocabulary, doc_ids=[f"d{i}" for i in range(20)])
