from __future__ import annotations

import logging
from collections import Counter
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel

from errors import ComputationError
from modeling.models import LdaConfig, RunSet
from stability.dendrogram import Dendrogram, complete_linkage
from stability.models import (
    ClusterComposition,
    ClusterGroup,
    Measure,
    SclopReport,
    SimilarityMatrix,
    ThresholdConfig,
)
from stability.similarity import pairwise_similarity


def scaled_disparity(t: Sequence[int]):
    """``R * U(g)``, an integer."""
    t = np.asarray(t, dtype=np.int64)
    return int(np.abs(t - 1).sum() * t.sum())


def disparity(t: Sequence[int]):
    """
    Deviation of a cluster from holding exactly one topic of every run.

    ``U(g) = (1/R) * sum_r |t_r - 1| * sum_r t_r``, where ``t`` is the run
    histogram of the cluster. The second factor penalises large clusters.
    """
    if len(t) < 1:
        raise ComputationError("A run histogram needs at least one run")

    return scaled_disparity(t) / len(t)


class DisparityTree:
    """
    Disparities and minimal disparity sums of every node of a dendrogram.

    All values are stored multiplied by R so they are integers and compare
    exactly.
    """

    def __init__(self, dendrogram: Dendrogram, R: int):
        if R < 1:
            raise ComputationError("At least one run is required")

        outside = sorted({run for run, _ in dendrogram.labels if not 0 <= run < R})
        if len(outside) > 0:
            raise ComputationError(f"Topic labels name run {outside[0]}, but only runs 0..{R - 1} exist")

        n = dendrogram.n_leaves
        self.__dendrogram = dendrogram
        self.__R = R
        self.__histograms = dendrogram.node_histograms(R)
        self.__scaled = np.abs(self.__histograms - 1).sum(axis=1) * self.__histograms.sum(axis=1)

        # A leaf can only be its own cluster: (R - 1) / R
        best = np.empty(2 * n - 1, dtype=np.int64)
        best[:n] = R - 1
        for step, (left, right, _) in enumerate(dendrogram.merges):
            node = n + step
            best[node] = min(self.__scaled[node], best[left] + best[right])
        self.__best = best

    @property
    def R(self):
        return self.__R

    def histogram(self, node: int):
        return self.__histograms[node]

    def disparity(self, node: int):
        return int(self.__scaled[node]) / self.__R

    def min_disparity(self, node: int):
        return int(self.__best[node]) / self.__R

    def scaled_min_disparity(self, node: int):
        return int(self.__best[node])

    def prune(self):
        """
        Local pruning: descend from the root and emit a node as one cluster as
        soon as its own disparity equals its minimal disparity sum.
        :return: The clusters, left to right.
        """
        groups = []
        stack = [self.__dendrogram.root]
        while len(stack) > 0:
            node = stack.pop()
            if self.__scaled[node] == self.__best[node]:
                groups.append(ClusterGroup(
                    members=self.__dendrogram.leaves_under(node),
                    t=self.__histograms[node].tolist(),
                    disparity=self.disparity(node),
                ))
            else:
                left, right = self.__dendrogram.children(node)
                stack.append(right)
                stack.append(left)

        return groups


def min_disparity(dendrogram: Dendrogram, node: int, R: int):
    """Minimal sum of disparities over all prunings of the subtree at ``node``."""
    return DisparityTree(dendrogram, R).min_disparity(node)


def prune(dendrogram: Dendrogram, R: int):
    """
    The optimal set of clusters of a dendrogram.
    :param R: The number of runs, including runs with no topic in the tree.
    """
    return DisparityTree(dendrogram, R).prune()


def summarize_groups(groups: List[ClusterGroup], R: int):
    sizes = Counter(sum(group.t) for group in groups)
    singletons = [0] * R
    missing = [0] * R
    for group in groups:
        if sum(group.t) == 1:
            singletons[group.t.index(1)] += 1

        if R > 1 and sum(group.t) == R - 1 and max(group.t) == 1:
            missing[group.t.index(0)] += 1

    return ClusterComposition(
        n_clusters=len(groups),
        size_counts=dict(sorted(sizes.items())),
        singletons_per_run=singletons,
        missing_run_counts=missing,
    )


def build_report(groups: List[ClusterGroup], R: int, N: int):
    """
    Normalises the disparity sum of a pruning by its highest possible
    value ``N * (R - 1) / R``, reached when every topic is its own cluster.
    """
    if R < 2:
        raise ComputationError(f"R ≥ 2 required, got {R} run")

    scaled_sum = sum(scaled_disparity(group.t) for group in groups)
    scaled_max = N * (R - 1)
    if scaled_sum > scaled_max:
        raise ComputationError(f"Disparity sum {scaled_sum / R:g} exceeds its maximum {scaled_max / R:g}")

    return SclopReport(
        groups=groups,
        u_sum=scaled_sum / R,
        u_max=scaled_max / R,
        score=1.0 - scaled_sum / scaled_max,
        composition=summarize_groups(groups, R),
    )


class SclopAnalysis(BaseModel):
    """Everything computed on the way to an S-CLOP score."""

    similarity: SimilarityMatrix
    dendrogram: Dendrogram
    report: SclopReport


def analyse(runset: RunSet,
            cfg: ThresholdConfig,
            measure: Measure = Measure.MODIFIED_JACCARD,
            n_top: int = 5):
    """
    Runs the S-CLOP pipeline: topic similarities, complete linkage on
    ``1 - s``, local pruning and the normalised score.
    """
    if runset.R < 2:
        raise ComputationError(f"R ≥ 2 required, got {runset.R} run")

    similarity = pairwise_similarity(runset, cfg, measure, n_top)
    dendrogram = complete_linkage(similarity.to_distance(), similarity.labels)
    tree = DisparityTree(dendrogram, runset.R)
    groups = tree.prune()

    if sum(scaled_disparity(group.t) for group in groups) != tree.scaled_min_disparity(dendrogram.root):
        raise ComputationError("Pruning does not attain the minimal disparity sum")

    report = build_report(groups, runset.R, runset.N)

    logging.info(
        f"S-CLOP over {runset.R} runs x {runset.K} topics: {len(groups)} clusters, "
        f"U*={report.u_sum:g}, U_max={report.u_max:g}, score={report.score:.4f}"
    )

    return SclopAnalysis(similarity=similarity, dendrogram=dendrogram, report=report)


def sclop(runset: RunSet,
          cfg: ThresholdConfig,
          measure: Measure = Measure.MODIFIED_JACCARD,
          n_top: int = 5):
    return analyse(runset, cfg, measure, n_top).report


def pair_runset(run_a: np.ndarray, run_b: np.ndarray):
    """Wraps two count matrices over one vocabulary as a two-run RunSet."""
    if run_a.shape != run_b.shape:
        raise ComputationError("Both runs need the same vocabulary and number of topics")

    vocabulary = [str(v) for v in range(run_a.shape[0])]
    configs = [LdaConfig(K=run_a.shape[1])] * 2
    return RunSet(runs=[run_a, run_b], vocabulary=vocabulary, configs=configs, seeds=[0, 0])


def sclop_pairwise(run_a: np.ndarray,
                   run_b: np.ndarray,
                   cfg: ThresholdConfig,
                   measure: Measure = Measure.MODIFIED_JACCARD,
                   n_top: int = 5):
    """
    S-CLOP of two runs; the normalisation is K.

    The runs are put in a canonical order first, so linkage ties resolve the
    same way for ``(a, b)`` and ``(b, a)``.
    """
    if _canonical_key(run_b) < _canonical_key(run_a):
        run_a, run_b = run_b, run_a

    return sclop(pair_runset(run_a, run_b), cfg, measure, n_top).score


def _canonical_key(run: np.ndarray):
    return run.shape, np.ascontiguousarray(run, dtype=np.int64).tobytes()
