import numpy as np
import pytest

from errors import ComputationError
from modeling.models import LdaConfig, RunSet
from stability.dendrogram import Dendrogram
from stability.models import ClusterGroup, Measure, ThresholdConfig
from stability.sclop import (
    DisparityTree,
    analyse,
    build_report,
    disparity,
    min_disparity,
    prune,
    scaled_disparity,
    sclop,
    sclop_pairwise,
    summarize_groups,
)


def random_dendrogram(rng, n, R):
    labels = [(int(rng.integers(0, R)), i) for i in range(n)]
    available = list(range(n))
    merges = []
    height = 0.0
    for step in range(n - 1):
        left, right = sorted(int(node) for node in rng.choice(available, size=2, replace=False))
        available.remove(left)
        available.remove(right)
        available.append(n + step)
        height += float(rng.random())
        merges.append((left, right, height))

    return Dendrogram(labels=labels, merges=merges)


def prunings(dend, node):
    """Every antichain covering the leaves under ``node``, as lists of nodes."""
    if dend.is_leaf(node):
        return [[node]]

    left, right = dend.children(node)
    result = [[node]]
    for a in prunings(dend, left):
        for b in prunings(dend, right):
            result.append(a + b)

    return result


def brute_force_minimum(dend, R):
    histograms = dend.node_histograms(R)
    return min(sum(scaled_disparity(histograms[node]) for node in nodes) for nodes in prunings(dend, dend.root))


def runset_of(runs):
    runs = [np.asarray(run, dtype=np.int64) for run in runs]
    return RunSet(
        runs=runs,
        vocabulary=[f"w{v:03d}" for v in range(runs[0].shape[0])],
        configs=[LdaConfig(K=runs[0].shape[1])] * len(runs),
        seeds=list(range(len(runs))),
    )


@pytest.mark.parametrize("t, expected", [
    ((1, 1, 1, 1), 0.0),
    ((2, 0, 1, 1), 2.0),
    ((50, 50, 50, 50), 9800.0),
    ((1, 0, 0, 0), 0.75),
    ((1, 1), 0.0),
])
def test_disparity(t, expected):
    assert disparity(t) == expected


def test_scaled_disparity_is_integer():
    assert scaled_disparity((2, 0, 1, 1)) == 8
    assert isinstance(scaled_disparity((3, 1)), int)


def test_leaf_minimal_disparity():
    dend = Dendrogram(labels=[(0, 0), (1, 0), (2, 0), (3, 0)], merges=[(0, 1, 0.1), (2, 3, 0.2), (4, 5, 0.3)])

    assert min_disparity(dend, 0, R=4) == 0.75
    assert min_disparity(dend, 4, R=4) == 1.0
    assert min_disparity(dend, dend.root, R=4) == 0.0


def test_perfect_cluster_wins():
    dend = Dendrogram(labels=[(0, 0), (1, 0), (2, 0), (3, 0)], merges=[(0, 1, 0.1), (2, 3, 0.2), (4, 5, 0.3)])

    groups = prune(dend, R=4)

    assert len(groups) == 1
    assert groups[0].t == [1, 1, 1, 1]
    assert groups[0].disparity == 0.0


def test_runs_without_topics_in_the_tree_still_count():
    dend = Dendrogram(labels=[(0, 0), (1, 0)], merges=[(0, 1, 0.5)])

    assert min_disparity(dend, dend.root, R=2) == 0.0
    assert min_disparity(dend, dend.root, R=3) == pytest.approx(2 / 3)
    assert [group.t for group in prune(dend, R=3)] == [[1, 1, 0]]


def test_labels_outside_the_runs_are_rejected():
    dend = Dendrogram(labels=[(0, 0), (3, 0)], merges=[(0, 1, 0.5)])

    with pytest.raises(ComputationError, match="run 3"):
        prune(dend, R=3)


def test_same_run_topics_split():
    dend = Dendrogram(labels=[(0, 0), (0, 1)], merges=[(0, 1, 0.5)])

    tree = DisparityTree(dend, 2)

    assert tree.disparity(2) == 2.0
    assert tree.min_disparity(2) == 1.0
    assert [group.members for group in tree.prune()] == [[(0, 0)], [(0, 1)]]


def test_tie_prefers_coarser_cluster():
    dend = Dendrogram(labels=[(0, 0), (1, 0), (0, 1), (2, 0)], merges=[(0, 1, 0.1), (2, 3, 0.2), (4, 5, 0.3)])

    tree = DisparityTree(dend, 4)

    assert tree.scaled_min_disparity(4) + tree.scaled_min_disparity(5) == 8
    assert tree.disparity(6) == tree.min_disparity(6) == 2.0
    assert [group.t for group in tree.prune()] == [[2, 1, 1, 0]]


@pytest.mark.parametrize("seed", range(500))
def test_dynamic_program_matches_antichain_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 13))
    R = int(rng.integers(2, 5))
    dend = random_dendrogram(rng, n, R)

    tree = DisparityTree(dend, R)
    groups = tree.prune()

    optimum = brute_force_minimum(dend, R)
    assert tree.scaled_min_disparity(dend.root) == optimum
    assert sum(scaled_disparity(group.t) for group in groups) == optimum
    assert sorted(member for group in groups for member in group.members) == sorted(dend.labels)


def test_identical_runs_pair_perfectly(block_run):
    runset = runset_of([block_run(5), block_run(5, order=[3, 1, 4, 0, 2])])

    report = sclop(runset, ThresholdConfig())

    assert report.u_sum == 0.0
    assert report.score == 1.0
    assert len(report.groups) == 5
    assert all(group.t == [1, 1] for group in report.groups)


def test_within_run_identical_topics_score_zero():
    run_a = np.zeros((8, 4), dtype=np.int64)
    run_a[:4, :] = 25
    run_b = np.zeros((8, 4), dtype=np.int64)
    run_b[4:, :] = 25

    report = sclop(runset_of([run_a, run_b]), ThresholdConfig())

    assert report.score == 0.0
    assert report.u_sum == report.u_max == 4.0
    assert len(report.groups) == 8


def test_runs_as_whole_clusters_degenerate_to_singletons():
    dend = Dendrogram(
        labels=[(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)],
        merges=[(0, 1, 0.1), (2, 3, 0.1), (4, 5, 0.1), (6, 7, 1.0), (8, 9, 1.0)],
    )

    groups = prune(dend, R=3)

    assert len(groups) == 6
    assert sum(group.disparity for group in groups) == pytest.approx(6 * 2 / 3)


def test_normalisation_with_fifty_topics_and_four_runs():
    perfect = [ClusterGroup(members=[(r, k) for r in range(4)], t=[1, 1, 1, 1], disparity=0.0) for k in range(25)]
    doubled = [
        ClusterGroup(members=[(0, 25 + k), (0, 45 + k), (1, 25 + k), (2, 25 + k), (3, 25 + k)], t=[2, 1, 1, 1], disparity=1.25)
        for k in range(20)
    ]

    report = build_report(perfect + doubled, R=4, N=200)

    assert report.u_max == 150
    assert report.u_sum == 25
    assert report.score == pytest.approx(1 - 25 / 150)
    assert round(report.score, 2) == 0.83
    assert report.composition.size_counts == {4: 25, 5: 20}


def test_report_needs_two_runs():
    with pytest.raises(ComputationError, match="R ≥ 2 required"):
        build_report([], R=1, N=5)


def test_composition():
    groups = [
        ClusterGroup(members=[(0, 0), (1, 0), (2, 0)], t=[1, 1, 1], disparity=0.0),
        ClusterGroup(members=[(0, 1), (1, 1)], t=[1, 1, 0], disparity=2 / 3),
        ClusterGroup(members=[(2, 1)], t=[0, 0, 1], disparity=2 / 3),
    ]

    composition = summarize_groups(groups, 3)

    assert composition.n_clusters == 3
    assert composition.size_counts == {1: 1, 2: 1, 3: 1}
    assert composition.singletons_per_run == [0, 0, 1]
    assert composition.missing_run_counts == [0, 0, 1]


def test_single_run_is_rejected(block_run):
    with pytest.raises(ComputationError, match="R ≥ 2 required"):
        sclop(runset_of([block_run(3)]), ThresholdConfig())


def test_analysis_is_consistent():
    rng = np.random.default_rng(2)
    runs = [rng.integers(0, 30, size=(20, 5)) for _ in range(4)]

    analysis = analyse(runset_of(runs), ThresholdConfig())

    report = analysis.report
    assert analysis.similarity.n == 20
    assert analysis.dendrogram.n_leaves == 20
    assert report.u_max == 15.0
    assert 0.0 <= report.score <= 1.0
    assert report.score == pytest.approx(1 - report.u_sum / report.u_max)
    assert report.composition.n_clusters == len(report.groups)


def test_pairwise(block_run):
    run = block_run(4)

    assert sclop_pairwise(run, block_run(4, order=[1, 0, 3, 2]), ThresholdConfig()) == 1.0


def test_pairwise_shape_mismatch(block_run):
    with pytest.raises(ComputationError):
        sclop_pairwise(block_run(4), block_run(3), ThresholdConfig())


def random_runs(rng, R, K, V=15, low=0):
    return [rng.integers(low, 40, size=(V, K)) for _ in range(R)]


def has_distinct_distances(values, gap=1e-9):
    upper = np.sort(values[np.triu_indices_from(values, k=1)])
    return len(upper) < 2 or np.diff(upper).min() > gap


@pytest.mark.parametrize("seed", range(1000))
def test_score_is_invariant_under_run_permutation(seed):
    rng = np.random.default_rng(seed)
    R = int(rng.integers(2, 5))
    runs = random_runs(rng, R, K=int(rng.integers(2, 5)), low=1)

    analysis = analyse(runset_of(runs), ThresholdConfig(), Measure.COSINE)
    if not has_distinct_distances(analysis.similarity.values):
        pytest.skip("linkage ties make the result depend on run order")

    order = rng.permutation(R)
    permuted = sclop(runset_of([runs[r] for r in order]), ThresholdConfig(), Measure.COSINE)

    assert permuted.u_sum == analysis.report.u_sum
    assert permuted.score == analysis.report.score


@pytest.mark.parametrize("seed", range(1000))
def test_score_bounds_on_random_run_sets(seed):
    rng = np.random.default_rng(seed)
    runs = random_runs(rng, R=int(rng.integers(2, 6)), K=int(rng.integers(1, 6)))
    for run in runs:
        run[rng.random(run.shape) < 0.4] = 0

    report = sclop(runset_of(runs), ThresholdConfig(value=20))

    assert 0.0 <= report.u_sum <= report.u_max
    assert 0.0 <= report.score <= 1.0
    assert report.score == pytest.approx(1 - report.u_sum / report.u_max)


def test_pairwise_is_symmetric():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        K = int(rng.integers(1, 5))
        a, b = random_runs(rng, 2, K, V=10)
        cfg = ThresholdConfig(value=float(rng.uniform(2, 50)))

        assert sclop_pairwise(a, b, cfg) == sclop_pairwise(b, a, cfg)
