import asyncio
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from errors import ComputationError
from modeling.lda_gibbs import CollapsedGibbsSampler, count_matrix, derive_seeds, fit_lda, replicate, replicate_async
from modeling.models import Corpus, LdaConfig


def two_word_corpus():
    return Corpus(documents=[[1, 1, 1], [2, 2, 2]], vocabulary=["a", "b"], doc_ids=["d1", "d2"])


def test_defaults():
    cfg = LdaConfig()

    assert cfg.K == 50
    assert cfg.alpha == pytest.approx(0.02)
    assert cfg.beta == pytest.approx(0.02)
    assert cfg.iterations == 270


@pytest.mark.parametrize("kwargs", [
    {"K": 0},
    {"alpha": 0.0},
    {"beta": -1.0},
    {"iterations": 0},
    {"seed": -1},
])
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        LdaConfig(**kwargs)


def test_single_topic_takes_every_token(separable_corpus):
    state = fit_lda(separable_corpus, LdaConfig(K=1, iterations=3, seed=1))

    assert all(np.all(topics == 0) for topics in state.assignments)
    assert state.topic_totals.tolist() == [separable_corpus.token_count]


def test_count_matrix_of_single_word_corpus():
    corpus = Corpus(documents=[[1, 1, 1, 1, 1]], vocabulary=["a"], doc_ids=["d1"])

    z = count_matrix(fit_lda(corpus, LdaConfig(K=1, iterations=2)))

    assert z.tolist() == [[5]]


def test_count_matrix_column_sums(separable_corpus):
    state = fit_lda(separable_corpus, LdaConfig(K=4, iterations=5, seed=3))
    z = count_matrix(state)

    assert z.shape == (10, 4)
    assert np.array_equal(z.sum(axis=0), state.topic_totals)
    assert (z >= 0).all()


def test_same_seed_same_state(separable_corpus):
    cfg = LdaConfig(K=3, iterations=10, seed=42)

    first = fit_lda(separable_corpus, cfg)
    second = fit_lda(separable_corpus, cfg)

    assert np.array_equal(first.topic_word_counts, second.topic_word_counts)
    assert all(np.array_equal(a, b) for a, b in zip(first.assignments, second.assignments))


def test_invariants_hold_after_every_sweep(separable_corpus):
    sampler = CollapsedGibbsSampler(separable_corpus, LdaConfig(K=3, iterations=1, seed=5))

    for _ in range(10):
        sampler.sweep()
        assert sampler.state().violations() == []


def test_check_invariants_runs_clean(separable_corpus):
    state = fit_lda(separable_corpus, LdaConfig(K=2, iterations=5), check_invariants=True)

    assert state.violations() == []


def test_violations_are_reported(separable_corpus):
    state = fit_lda(separable_corpus, LdaConfig(K=2, iterations=1))
    state.topic_totals[0] += 1

    assert len(state.violations()) == 2


def test_empty_document_rejected():
    corpus = Corpus(documents=[[1], []], vocabulary=["a"], doc_ids=["d1", "d2"])

    with pytest.raises(ComputationError, match="d2"):
        fit_lda(corpus, LdaConfig(K=2))


def test_documents_concentrate_on_one_topic():
    corpus = two_word_corpus()
    concentrated = 0
    for seed in range(50):
        state = fit_lda(corpus, LdaConfig(K=2, alpha=0.02, beta=0.02, iterations=200, seed=seed))
        shares = state.doc_topic_counts.max(axis=1) / state.doc_topic_counts.sum(axis=1)
        if (shares > 0.9).all():
            concentrated += 1

    assert concentrated >= 45


def test_separable_corpus_topics_split_vocabulary(separable_corpus):
    z = count_matrix(fit_lda(separable_corpus, LdaConfig(K=2, iterations=50, seed=11)))

    low = z[:5].sum(axis=0)
    high = z[5:].sum(axis=0)
    purity = np.maximum(low, high) / z.sum(axis=0)
    assert (purity > 0.9).all()


def test_derive_seeds():
    seeds = derive_seeds(0, 3)

    assert seeds[0] == 0xE220A8397B1DCDAF
    assert len(set(seeds)) == 3
    assert all(0 <= seed < 2 ** 64 for seed in seeds)
    assert derive_seeds(0, 5)[:3] == seeds


def test_replicate_is_deterministic(separable_corpus):
    cfg = LdaConfig(K=2, iterations=5)

    first = replicate(separable_corpus, cfg, 3, master_seed=9)
    second = replicate(separable_corpus, cfg, 3, master_seed=9)

    assert first.R == 3
    assert first.N == 6
    assert first.seeds == derive_seeds(9, 3)
    assert all(np.array_equal(a, b) for a, b in zip(first.runs, second.runs))


def test_single_replication_matches_fit(separable_corpus):
    cfg = LdaConfig(K=2, iterations=5)

    runset = replicate(separable_corpus, cfg, 1, master_seed=4)
    direct = count_matrix(fit_lda(separable_corpus, cfg.copy(update={"seed": derive_seeds(4, 1)[0]})))

    assert np.array_equal(runset.runs[0], direct)


def test_replicate_async_matches_sequential(separable_corpus):
    cfg = LdaConfig(K=2, iterations=5)

    with ThreadPoolExecutor(max_workers=3) as executor:
        parallel = asyncio.run(replicate_async(separable_corpus, cfg, 3, 9, executor))
    sequential = replicate(separable_corpus, cfg, 3, 9)

    assert parallel.seeds == sequential.seeds
    assert all(np.array_equal(a, b) for a, b in zip(parallel.runs, sequential.runs))


def test_replicate_needs_a_run(separable_corpus):
    with pytest.raises(ComputationError):
        replicate(separable_corpus, LdaConfig(K=2), 0, 0)
