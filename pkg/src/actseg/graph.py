"""Skeleton graph construction and adjacency normalization.

The spatial convolution operates on a fixed undirected joint graph. Two
normalization strategies are supported: ``uniform`` (one symmetric matrix for
self + neighbors) and ``distance`` (self loops and 1-hop neighbors normalized
separately, giving the spatial convolution two partitions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidGraph, InvalidPermutation

STRATEGIES = ("uniform", "distance")


@dataclass(frozen=True)
class SkeletonGraph:
    """Undirected joint graph, immutable after construction.

    ``edges`` is a canonically sorted tuple of (i, j) pairs with i < j.
    Self-loops are not stored explicitly; they are added during normalization.
    """

    num_joints: int
    edges: tuple[tuple[int, int], ...]
    self_loops: bool = True


@dataclass(frozen=True)
class NormalizedAdjacency:
    """One matrix for ``uniform``, two (self part, neighbor part) for ``distance``."""

    strategy: str
    matrices: tuple[np.ndarray, ...]

    @property
    def num_partitions(self) -> int:
        return len(self.matrices)


def build_skeleton_graph(num_joints: int, edges) -> SkeletonGraph:
    if num_joints < 1:
        raise InvalidGraph(f"num_joints must be >= 1, got {num_joints}")
    canonical: set[tuple[int, int]] = set()
    for edge in edges:
        if len(edge) != 2:
            raise InvalidGraph(f"edge {edge!r} is not a pair")
        i, j = int(edge[0]), int(edge[1])
        if i == j:
            raise InvalidGraph(f"self-loop edge ({i}, {j}) not allowed in edge list")
        if not (0 <= i < num_joints and 0 <= j < num_joints):
            raise InvalidGraph(
                f"edge ({i}, {j}) out of range for {num_joints} joints"
            )
        canonical.add((min(i, j), max(i, j)))
    return SkeletonGraph(num_joints=num_joints, edges=tuple(sorted(canonical)))


def adjacency_matrix(graph: SkeletonGraph) -> np.ndarray:
    """Dense 0/1 adjacency without self-loops."""
    a = np.zeros((graph.num_joints, graph.num_joints), dtype=np.float64)
    for i, j in graph.edges:
        a[i, j] = 1.0
        a[j, i] = 1.0
    return a


def _sym_normalize(a: np.ndarray) -> np.ndarray:
    """D^(-1/2) A D^(-1/2) with zero-degree rows left as zero."""
    deg = a.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    return inv_sqrt[:, None] * a * inv_sqrt[None, :]


def normalized_adjacency(graph: SkeletonGraph, strategy: str = "uniform") -> NormalizedAdjacency:
    if strategy not in STRATEGIES:
        raise InvalidGraph(f"unknown normalization strategy {strategy!r}")
    a = adjacency_matrix(graph)
    if strategy == "uniform":
        mats = (_sym_normalize(a + np.eye(graph.num_joints)),)
    else:
        mats = (np.eye(graph.num_joints), _sym_normalize(a))
    return NormalizedAdjacency(strategy=strategy, matrices=mats)


def permute_graph(graph: SkeletonGraph, perm) -> SkeletonGraph:
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(graph.num_joints)):
        raise InvalidPermutation(
            f"perm {perm!r} is not a bijection on [0, {graph.num_joints})"
        )
    edges = [(perm[i], perm[j]) for i, j in graph.edges]
    return build_skeleton_graph(graph.num_joints, edges)


def permutation_matrix(perm) -> np.ndarray:
    """P with P[perm[i], i] = 1, so P @ x reindexes x by perm."""
    n = len(perm)
    p = np.zeros((n, n), dtype=np.float64)
    for i, q in enumerate(perm):
        p[q, i] = 1.0
    return p
