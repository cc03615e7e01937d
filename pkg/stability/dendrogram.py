from __future__ import annotations

import heapq
import logging
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, root_validator

from errors import ComputationError


class Dendrogram(BaseModel):
    """
    Binary merge tree over N labelled leaves.

    Leaves are nodes ``0..N-1``; the t-th merge creates node ``N + t`` from
    ``merges[t] = (left, right, height)`` with ``left < right``. Children
    always have smaller ids than their parent and the root is ``2N - 2``.
    """

    labels: List[Tuple[int, int]]
    merges: List[Tuple[int, int, float]]

    @root_validator(skip_on_failure=True)
    def check_merges(cls, values):
        n = len(values["labels"])
        merges = values["merges"]
        if n < 2 or len(merges) != n - 1:
            raise ValueError(f"{n} leaves need exactly {n - 1} merges")

        used = set()
        for step, (left, right, _) in enumerate(merges):
            if not (left < n + step and right < n + step) or left in used or right in used or left == right:
                raise ValueError(f"merge {step} does not join two available nodes")
            used.update((left, right))

        return values

    @property
    def n_leaves(self):
        return len(self.labels)

    @property
    def root(self):
        return 2 * self.n_leaves - 2

    def is_leaf(self, node: int):
        return node < self.n_leaves

    def children(self, node: int):
        left, right, _ = self.merges[node - self.n_leaves]
        return left, right

    def height(self, node: int):
        if self.is_leaf(node):
            return 0.0

        return self.merges[node - self.n_leaves][2]

    def leaf_nodes_under(self, node: int):
        """Leaf node ids under ``node``, left to right."""
        leaves = []
        stack = [node]
        while len(stack) > 0:
            current = stack.pop()
            if self.is_leaf(current):
                leaves.append(current)
            else:
                left, right = self.children(current)
                stack.append(right)
                stack.append(left)

        return leaves

    def leaves_under(self, node: int):
        return [self.labels[leaf] for leaf in self.leaf_nodes_under(node)]

    def leaf_order(self):
        return self.leaf_nodes_under(self.root)

    def run_histogram(self, node: int, R: int):
        """
        Number of leaves under ``node`` from each run.
        :return: A length-R integer vector.
        """
        histogram = np.zeros(R, dtype=np.int64)
        for run, _ in self.leaves_under(node):
            histogram[run] += 1

        return histogram

    def node_histograms(self, R: int):
        """Run histograms of all ``2N - 1`` nodes, indexed by node id."""
        n = self.n_leaves
        histograms = np.zeros((2 * n - 1, R), dtype=np.int64)
        for leaf, (run, _) in enumerate(self.labels):
            histograms[leaf, run] = 1

        for step, (left, right, _) in enumerate(self.merges):
            histograms[n + step] = histograms[left] + histograms[right]

        return histograms


def complete_linkage(dist: np.ndarray, labels: Sequence[Tuple[int, int]]):
    """
    Agglomerative clustering with complete linkage.

    Repeatedly merges the two clusters with the smallest maximum pairwise
    distance. Ties go to the smallest ``(i, j)`` pair of cluster ids, where
    ids follow creation order. Every cluster keeps its distances to the
    older clusters sorted and offers only its current best partner to a
    heap, so a merge costs O(N log N) and the whole tree O(N² log N).
    :param dist: A symmetric N×N distance matrix with zero diagonal.
    :param labels: One label per leaf.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0] if dist.ndim == 2 else 0

    if n < 2:
        raise ComputationError("Clustering needs at least two objects")

    if dist.shape != (n, n) or len(labels) != n:
        raise ComputationError("Distance matrix and labels do not match")

    if not np.array_equal(dist, dist.T) or np.any(np.diag(dist) != 0) or np.any(np.isnan(dist)):
        raise ComputationError("Distances must be symmetric with a zero diagonal")

    work = dist.copy()
    alive = np.zeros(2 * n - 1, dtype=bool)
    alive[:n] = True
    slot_alive = np.ones(n, dtype=bool)
    slot_cluster = np.arange(n)
    slot_of = {cluster: cluster for cluster in range(n)}

    candidates = {}
    pointers = {}
    heap = []

    def offer(owner):
        partners, distances = candidates[owner]
        position = pointers[owner]
        while position < len(partners) and not alive[partners[position]]:
            position += 1

        pointers[owner] = position
        if position < len(partners):
            heapq.heappush(heap, (float(distances[position]), int(partners[position]), owner))

    for owner in range(1, n):
        row = dist[owner, :owner]
        order = np.lexsort((np.arange(owner), row))
        candidates[owner] = (order, row[order])
        pointers[owner] = 0
        offer(owner)

    merges = []
    for step in range(n - 1):
        while True:
            height, i, j = heapq.heappop(heap)
            if not alive[j]:
                continue

            if not alive[i]:
                pointers[j] += 1
                offer(j)
                continue

            break

        cluster = n + step
        merges.append((i, j, height))
        logging.debug(f"Merged {i} and {j} into {cluster} at height {height}")

        slot_i = slot_of.pop(i)
        slot_j = slot_of.pop(j)
        alive[i] = alive[j] = False
        candidates.pop(i, None)
        candidates.pop(j, None)

        merged = np.maximum(work[slot_i], work[slot_j])
        work[slot_i, :] = merged
        work[:, slot_i] = merged
        work[slot_i, slot_i] = 0.0
        slot_alive[slot_j] = False
        slot_cluster[slot_i] = cluster
        slot_of[cluster] = slot_i
        alive[cluster] = True

        others = slot_alive.copy()
        others[slot_i] = False
        partners = slot_cluster[others]
        distances = merged[others]
        order = np.lexsort((partners, distances))
        candidates[cluster] = (partners[order], distances[order])
        pointers[cluster] = 0
        offer(cluster)

    return Dendrogram(labels=list(labels), merges=merges)
