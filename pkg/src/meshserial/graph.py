"""Node traversal graph built from element connectivity."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import connected_components

from .mesh import Mesh, elements_by_kind


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph in CSR form.

    Neighbors of ``v`` are ``indices[indptr[v]:indptr[v + 1]]``, sorted
    ascending, duplicate-free, and never containing ``v`` itself.
    """

    n_nodes: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        for name in ("indptr", "indices"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.indptr.shape != (self.n_nodes + 1,):
            raise ValueError("indptr must have n_nodes + 1 entries")

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "Graph":
        """Build from an iterable of ``(u, v)`` pairs; symmetrized and deduplicated."""
        e = np.array(list(edges), dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n_nodes):
            raise ValueError("edge endpoint out of range")
        return _from_pairs(n_nodes, np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))

    @property
    def n_edges(self) -> int:
        return self.indices.shape[0] // 2

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def adjacency(self) -> list:
        return [self.indices[self.indptr[v]:self.indptr[v + 1]].tolist() for v in range(self.n_nodes)]

    def edges(self) -> np.ndarray:
        """Unique undirected edges as an ``(E, 2)`` array with ``u < v``."""
        rows = np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degree)
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )


def _from_pairs(n: int, src: np.ndarray, dst: np.ndarray) -> Graph:
    keep = src != dst
    key = np.unique(src[keep] * n + dst[keep]) if n else np.empty(0, dtype=np.int64)
    rows, cols = np.divmod(key, n) if n else (key, key)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return Graph(n, indptr, cols)


def build_traversal_graph(mesh: Mesh) -> Graph:
    """Connect every pair of distinct nodes that share an element.

    Quads and hexes therefore gain their diagonals. Nodes outside every
    element stay isolated.
    """
    src, dst = [], []
    for conn in elements_by_kind(mesh).values():
        for a, b in permutations(range(conn.shape[1]), 2):
            src.append(conn[:, a])
            dst.append(conn[:, b])
    empty = np.empty(0, dtype=np.int64)
    return _from_pairs(
        mesh.n_nodes,
        np.concatenate(src) if src else empty,
        np.concatenate(dst) if dst else empty,
    )


def neighbors(graph: Graph, v: int) -> list:
    if not 0 <= v < graph.n_nodes:
        raise IndexError(f"node id {v} out of range [0, {graph.n_nodes})")
    return graph.indices[graph.indptr[v]:graph.indptr[v + 1]].tolist()


def component_count(graph: Graph) -> int:
    if graph.n_nodes == 0:
        return 0
    data = np.ones(graph.indices.shape[0], dtype=np.int8)
    adj = csr_array((data, graph.indices, graph.indptr), shape=(graph.n_nodes, graph.n_nodes))
    count, _ = connected_components(adj, directed=False)
    return int(count)


def dump_adjacency(graph: Graph) -> str:
    """Debug listing, one ``u: v1 v2 ...`` line per node."""
    return "".join(
        f"{u}: {' '.join(map(str, row))}\n".replace(": \n", ":\n") for u, row in enumerate(graph.adjacency)
    )
