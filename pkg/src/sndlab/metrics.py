"""System-level diversity metrics over a behavioral distance matrix.

Two complementary aggregations:

* ``snd``: the mean behavioral distance over unique agent pairs.  Invariant
  to the number of equidistant agents, and decreasing in behavioral
  redundancy (more agents per cluster).
* ``hse``: hierarchic social entropy -- the integral over clustering
  thresholds ``l`` of the Shannon entropy of the partition induced by
  "distance <= l" connectivity (single linkage).  Grows with the number of
  equidistant agents and ignores redundancy, the opposite trade-off.

The threshold partition changes at finitely many levels, so the entropy
integral is computed exactly from the dendrogram breakpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import BehavioralDistanceMatrix

Partition = tuple[tuple[int, ...], ...]


def snd(D: BehavioralDistanceMatrix) -> float:
    """Mean pairwise distance over the strict upper triangle of D."""
    if D.n < 2:
        raise ValueError("diversity is undefined for fewer than two agents")
    iu = np.triu_indices(D.n, k=1)
    return float(np.mean(D.values[iu]))


def snd_redundancy_formula(x: float, n: int, n_c: int) -> float:
    """Closed-form SND of n agents split equally into n_c clusters at distance x.

    Intra-cluster distances are 0 and inter-cluster distances are x, giving
    ``x * n * (n_c - 1) / (n_c * (n - 1))``.  Used as an exact oracle against
    ``snd`` on synthetic cluster matrices, and to derive control targets.
    """
    if x < 0.0:
        raise ValueError("x must be non-negative")
    if n < 2:
        raise ValueError("need at least two agents")
    if n_c < 1:
        raise ValueError("cluster count must be >= 1")
    if n % n_c != 0:
        raise ValueError(f"cluster count {n_c} must divide agent count {n}")
    return x * n * (n_c - 1) / (n_c * (n - 1))


@dataclass(frozen=True)
class Dendrogram:
    """Threshold structure of the single-linkage clustering of a matrix.

    ``partitions[k]`` is the agent partition in effect for thresholds in
    ``[levels[k], levels[k+1])``; the final partition (always a single
    cluster for a finite matrix) holds from ``levels[-1]`` onward.
    ``levels[0]`` is 0, and the partition there already merges any agents at
    distance exactly 0.
    """

    levels: tuple[float, ...]
    partitions: tuple[Partition, ...]

    def __post_init__(self) -> None:
        if len(self.levels) != len(self.partitions):
            raise ValueError("levels and partitions must align")
        if not self.levels or self.levels[0] != 0.0:
            raise ValueError("levels must start at 0")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be strictly increasing")

    @property
    def n(self) -> int:
        return sum(len(c) for c in self.partitions[0])


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def build_dendrogram(D: BehavioralDistanceMatrix) -> Dendrogram:
    """Connected-component partitions of the thresholded distance graph.

    An edge (i, j) is present at level ``l`` iff ``d(i, j) <= l``; components
    under this rule coincide with single-linkage clusters.  Only levels where
    the partition actually coarsens are recorded.
    """
    n = D.n
    uf = _UnionFind(n)
    iu, ju = np.triu_indices(n, k=1)
    weights = D.values[iu, ju]
    order = np.argsort(weights, kind="stable")

    def current_partition() -> Partition:
        groups: dict[int, list[int]] = {}
        for a in range(n):
            groups.setdefault(uf.find(a), []).append(a)
        return tuple(sorted(tuple(sorted(g)) for g in groups.values()))

    # Zero-distance agents co-cluster from the start.
    k = 0
    while k < len(order) and weights[order[k]] == 0.0:
        e = order[k]
        uf.union(int(iu[e]), int(ju[e]))
        k += 1
    levels = [0.0]
    partitions = [current_partition()]
    while k < len(order):
        level = float(weights[order[k]])
        changed = False
        while k < len(order) and weights[order[k]] == level:
            e = order[k]
            changed |= uf.union(int(iu[e]), int(ju[e]))
            k += 1
        if changed:
            levels.append(level)
            partitions.append(current_partition())
    return Dendrogram(tuple(levels), tuple(partitions))


def shannon_entropy(proportions) -> float:
    """Shannon entropy in bits of a proportion vector summing to 1.

    Zero-probability classes contribute 0 by convention; negative entries or
    a sum off by more than 1e-9 are rejected.
    """
    p = np.asarray(proportions, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("proportions must be a non-empty 1-D vector")
    if np.any(p < 0.0):
        raise ValueError("proportions must be non-negative")
    total = float(np.sum(p))
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"proportions must sum to 1, got {total}")
    p = p[p > 0.0]
    return float(-np.sum(p * np.log2(p)))


def hse(D: BehavioralDistanceMatrix) -> float:
    """Hierarchic social entropy: exact integral of the partition entropy.

    The entropy of the threshold partition is piecewise constant between
    dendrogram levels and 0 once all agents merge, so the improper integral
    reduces to a finite sum of (interval width) x (entropy).
    """
    if D.n < 1:
        raise ValueError("need at least one agent")
    dend = build_dendrogram(D)
    n = D.n
    total = 0.0
    for k in range(len(dend.levels) - 1):
        width = dend.levels[k + 1] - dend.levels[k]
        sizes = np.array([len(c) for c in dend.partitions[k]], dtype=float)
        total += width * shannon_entropy(sizes / n)
    return total


def equidistant_matrix(n: int, x: float) -> BehavioralDistanceMatrix:
    """Synthetic matrix with every agent pair at distance x."""
    if n < 1:
        raise ValueError("need at least one agent")
    if x < 0.0:
        raise ValueError("x must be non-negative")
    vals = np.full((n, n), float(x))
    np.fill_diagonal(vals, 0.0)
    return BehavioralDistanceMatrix(vals, kind="synthetic")


def cluster_matrix(n: int, n_c: int, x: float) -> BehavioralDistanceMatrix:
    """Synthetic matrix: n agents in n_c equal clusters, intra 0 / inter x.

    Agents are assigned to clusters in contiguous blocks of size ``n / n_c``.
    """
    if n < 1:
        raise ValueError("need at least one agent")
    if n_c < 1 or n % n_c != 0:
        raise ValueError(f"cluster count {n_c} must divide agent count {n}")
    if x < 0.0:
        raise ValueError("x must be non-negative")
    cluster = np.arange(n) // (n // n_c)
    vals = np.where(cluster[:, None] == cluster[None, :], 0.0, float(x))
    np.fill_diagonal(vals, 0.0)
    return BehavioralDistanceMatrix(vals, kind="synthetic")
