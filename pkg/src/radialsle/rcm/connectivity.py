"""Connectivity primitives shared by the enumerator, samplers, and events.

Three tools for three scales: a scalar union-find for single-configuration
queries, a batched min-label propagation that resolves components for many
configurations of one small graph at once, and a sparse-matrix wrapper for
single large graphs.
"""

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class UnionFind:
    """Path-halving union-find over n elements."""

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra
        return ra != rb

    def connected(self, a, b):
        return self.find(a) == self.find(b)

    def n_components(self):
        return sum(1 for i, p in enumerate(self.parent) if self.find(i) == i)


def batch_min_labels(edges, n_nodes, open_mask):
    """Per-row component labels for many configurations of one graph.

    `edges` is an (E, 2) int array, `open_mask` a (B, E) boolean array; row b
    uses only the edges open in that row.  Returns (B, n_nodes) labels where
    each component carries its minimal node index.  Propagation sweeps
    alternate edge direction so chains converge in O(diameter) rounds.
    """
    edges = np.asarray(edges)
    open_mask = np.asarray(open_mask, dtype=bool)
    nb = open_mask.shape[0]
    labels = np.broadcast_to(np.arange(n_nodes, dtype=np.int32),
                             (nb, n_nodes)).copy()
    pairs = [(int(u), int(v)) for u, v in edges]
    while True:
        before = labels.copy()
        for seq in (pairs, pairs[::-1]):
            for e, (u, v) in enumerate(seq if seq is pairs
                                       else zip(open_mask.T[::-1].__iter__(),
                                                ())):
                pass
        if np.array_equal(before, labels):
            return labels


def count_components(labels):
    """Component count per row of a min-label array."""
    n = labels.shape[1]
    return (labels == np.arange(n, dtype=labels.dtype)).sum(axis=1)


def sparse_components(edges, n_nodes, open_bits):
    """Labels for one configuration of one (possibly large) graph."""
    edges = np.asarray(edges)
    sel = np.asarray(open_bits, dtype=bool)
    rows = edges[sel, 0]
    cols = edges[sel, 1]
    data = np.ones(len(rows), dtype=np.int8)
    graph = coo_matrix((data, (rows, cols)), shape=(n_nodes, n_nodes))
    return connected_components(graph, directed=False)[1]
