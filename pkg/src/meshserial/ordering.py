"""Serialization orders for mesh nodes and the linear-arrangement cost."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import islice, permutations

import numpy as np

from ._backend import kernels
from .graph import Graph
from .permute import Permutation
from .rng import shuffled_range

STRATEGIES = ("identity", "random", "greedy", "bfs", "rcm")
JUMPS = ("lowest", "nearest")
BRUTE_FORCE_MAX_NODES = 10


@dataclass(frozen=True)
class OrderingStrategy:
    kind: str
    seed: int | None = None
    jump: str = "lowest"

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}; choose from {', '.join(STRATEGIES)}")
        if self.kind == "random" and self.seed is None:
            raise ValueError("random strategy needs a seed")
        if self.kind != "random" and self.seed is not None:
            raise ValueError(f"{self.kind} strategy takes no seed")
        if self.jump not in JUMPS:
            raise ValueError(f"unknown jump rule {self.jump!r}")
        if self.kind != "greedy" and self.jump != "lowest":
            raise ValueError("only greedy takes a jump rule")

    @classmethod
    def parse(cls, text: str, default_seed: int | None = None) -> "OrderingStrategy":
        """Parse ``"greedy"``, ``"greedy:nearest"``, ``"random:42"``, or ``"random"``.

        A bare ``"random"`` takes ``default_seed``.
        """
        kind, _, arg = text.strip().partition(":")
        if kind == "random":
            try:
                return cls(kind, int(arg) if arg else default_seed)
            except ValueError:
                raise ValueError(f"bad random seed {arg!r}") from None
        if kind == "greedy" and arg:
            return cls(kind, jump=arg)
        if arg:
            raise ValueError(f"{kind} strategy takes no argument")
        return cls(kind)

    def __str__(self):
        if self.kind == "random":
            return f"random:{self.seed}"
        if self.jump != "lowest":
            return f"{self.kind}:{self.jump}"
        return self.kind


def greedy_order(graph: Graph, coords, start: int = 0, jump: str = "lowest") -> Permutation:
    """Walk the graph, always stepping to the nearest unvisited neighbor.

    From the last appended node, the unvisited neighbor with the smallest
    Euclidean distance is taken next (smallest id on ties). When the current
    node has no unvisited neighbor, the walk jumps to the smallest unvisited
    id, or with ``jump="nearest"`` to the geometrically closest unvisited node
    (an O(n) scan per jump). Distances are compared squared, which orders
    them identically.
    """
    if jump not in JUMPS:
        raise ValueError(f"unknown jump rule {jump!r}")
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    n = graph.n_nodes
    if coords.ndim == 1:
        coords = coords.reshape(-1, 1)
    if coords.shape[0] != n:
        raise ValueError(f"coords length mismatch: {coords.shape[0]} rows for {n} nodes")
    if n == 0:
        if start != 0:
            raise IndexError("start node out of range for an empty graph")
        return Permutation(np.zeros(0, dtype=np.int64))
    if not 0 <= start < n:
        raise IndexError(f"start node {start} out of range [0, {n})")
    walk = kernels.greedy_walk(graph.indptr, graph.indices, coords, int(start), jump == "nearest")
    return Permutation(walk)


def bfs_order(graph: Graph) -> Permutation:
    n = graph.n_nodes
    indptr, indices = graph.indptr, graph.indices
    visited = np.zeros(n, dtype=bool)
    order = []
    for root in range(n):
        if visited[root]:
            continue
        visited[root] = True
        queue = deque([root])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in indices[indptr[u]:indptr[u + 1]].tolist():
                if not visited[v]:
                    visited[v] = True
                    queue.append(v)
    return Permutation(np.array(order, dtype=np.int64))


def cuthill_mckee_order(graph: Graph) -> Permutation:
    """Cuthill-McKee numbering, one breadth-first sweep per component.

    Each sweep starts at the unvisited node of minimum degree (smallest id
    among ties) and enqueues neighbors by ascending degree, then id.
    """
    n = graph.n_nodes
    indptr, indices = graph.indptr, graph.indices
    degree = graph.degree
    by_degree = np.lexsort((np.arange(n), degree)).tolist()
    visited = np.zeros(n, dtype=bool)
    order = []
    for root in by_degree:
        if visited[root]:
            continue
        visited[root] = True
        queue = deque([root])
        while queue:
            u = queue.popleft()
            order.append(u)
            nbrs = indices[indptr[u]:indptr[u + 1]]
            nbrs = nbrs[~visited[nbrs]]
            # stable sort on degree keeps ascending ids within a degree
            nbrs = nbrs[np.argsort(degree[nbrs], kind="stable")]
            visited[nbrs] = True
            queue.extend(nbrs.tolist())
    return Permutation(np.array(order, dtype=np.int64))


def rcm_order(graph: Graph) -> Permutation:
    return Permutation(cuthill_mckee_order(graph).order[::-1])


def order_nodes(strategy: OrderingStrategy, graph: Graph, coords=None, start: int = 0) -> Permutation:
    """Dispatch on ``strategy``. ``start`` applies to ``greedy`` only."""
    n = graph.n_nodes
    if strategy.kind == "identity":
        return Permutation.identity(n)
    if strategy.kind == "random":
        return Permutation(shuffled_range(n, strategy.seed))
    if strategy.kind == "greedy":
        if coords is None:
            raise ValueError("greedy ordering needs node coordinates")
        return greedy_order(graph, coords, start, strategy.jump)
    if strategy.kind == "bfs":
        return bfs_order(graph)
    return rcm_order(graph)


def minla_cost(graph: Graph, perm: Permutation) -> int:
    """Sum of ``|pos(u) - pos(v)|`` over unique undirected edges."""
    if len(perm) != graph.n_nodes:
        raise ValueError(f"length mismatch: permutation of {len(perm)} for {graph.n_nodes} nodes")
    pos = perm.positions()
    e = graph.edges()
    return int(np.abs(pos[e[:, 0]] - pos[e[:, 1]]).sum())


def brute_force_minla(graph: Graph, chunk: int = 50_000) -> tuple[Permutation, int]:
    """Exact minimum linear arrangement by enumerating all ``n!`` orders.

    Returns the lexicographically smallest optimal order and its cost.
    Only for ``n <= 10``.
    """
    n = graph.n_nodes
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")
    if n == 0:
        return Permutation(np.zeros(0, dtype=np.int64)), 0
    e = graph.edges()
    best_cost, best_order = math.inf, None
    perms = permutations(range(n))
    # itertools yields orders lexicographically; keep the first minimum
    while True:
        block = np.array(list(islice(perms, chunk)), dtype=np.int8)
        if block.size == 0:
            break
        pos = np.argsort(block, axis=1)
        cost = np.abs(pos[:, e[:, 0]] - pos[:, e[:, 1]]).sum(axis=1) if len(e) else np.zeros(len(block), dtype=np.int64)
        k = int(np.argmin(cost))
        if cost[k] < best_cost:
            best_cost, best_order = int(cost[k]), block[k].astype(np.int64)
    return Permutation(best_order), best_cost
