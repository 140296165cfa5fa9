"""Directed graphs, incidence matrices and distributed Laplacians.

Edge orientation convention: for edge ``(i, j)`` node ``i`` is the tail
(-1 in the incidence column) and ``j`` the head (+1), so the edge-space
coordinate is ``x_j - x_i``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DirectedGraph:
    """Weighted-graph topology with a fixed edge order.

    Parameters
    ----------
    node_count : int
        Number of nodes, including the leader node 0.
    edges : sequence of (tail, head)
        Edge ``k`` (0-based here, 1-based in prose) is ``edges[k]``.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    _incidence: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.node_count < 2:
            raise ValueError("graph needs at least two nodes")
        if not edges:
            raise ValueError("graph needs at least one edge")
        for k, (a, b) in enumerate(edges):
            if not (0 <= a < self.node_count and 0 <= b < self.node_count):
                raise ValueError(f"edge {k + 1} {a, b} references a missing node")
            if a == b:
                raise ValueError(f"edge {k + 1} is a self-loop on node {a}")
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edges")
        unreached = set(range(self.node_count)) - _reachable(self.node_count, edges)
        if unreached:
            raise ValueError(f"graph is not connected; unreachable nodes {sorted(unreached)}")

        d = np.zeros((self.node_count, len(edges)))
        for k, (tail, head) in enumerate(edges):
            d[tail, k] = -1.0
            d[head, k] = 1.0
        d.setflags(write=False)
        object.__setattr__(self, "_incidence", d)

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, node: int) -> list[int]:
        out = set()
        for a, b in self.edges:
            if a == node:
                out.add(b)
            elif b == node:
                out.add(a)
        return sorted(out)

    def incident_edges(self, node: int) -> list[int]:
        return [k for k, e in enumerate(self.edges) if node in e]


def _reachable(n, edges):
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u in adj[v] - seen:
            seen.add(u)
            queue.append(u)
    return seen


@dataclass(frozen=True)
class EdgeWeights:
    """Per-agent edge weights.

    ``running[i, k]`` and ``terminal[i, k]`` are agent ``i``'s weights on
    edge ``k``; row 0 (the leader) must be zero.  ``control[i]`` is agent
    ``i``'s control penalty; ``control[0]`` is ignored.
    """

    running: np.ndarray
    terminal: np.ndarray
    control: np.ndarray

    def __post_init__(self):
        for name in ("running", "terminal", "control"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.running.ndim != 2 or self.running.shape != self.terminal.shape:
            raise ValueError("running and terminal weights must share shape (nodes, edges)")
        if self.control.shape != (self.running.shape[0],):
            raise ValueError("control weights must have one entry per node")
        if np.any(self.running < 0) or np.any(self.terminal < 0):
            raise ValueError("edge weights must be nonnegative")
        if np.any(self.running[0]) or np.any(self.terminal[0]):
            raise ValueError("the leader (node 0) carries no weights")
        if np.any(~(self.control[1:] > 0)):
            raise ValueError("control penalties r_i must be positive")

    def running_matrix(self, agent: int) -> np.ndarray:
        return np.diag(self.running[agent])

    def terminal_matrix(self, agent: int) -> np.ndarray:
        return np.diag(self.terminal[agent])


def check_weights(graph: DirectedGraph, weights: EdgeWeights) -> None:
    """Reject weights that do not fit the graph or use non-local information."""
    if weights.running.shape != (graph.node_count, graph.m):
        raise ValueError(
            f"weights have shape {weights.running.shape}, expected {(graph.node_count, graph.m)}"
        )
    for i in range(1, graph.node_count):
        local = np.zeros(graph.m, dtype=bool)
        local[graph.incident_edges(i)] = True
        for name, w in (("running", weights.running[i]), ("terminal", weights.terminal[i])):
            bad = np.flatnonzero((w != 0) & ~local)
            if bad.size:
                raise ValueError(
                    f"agent {i} has {name} weight on non-incident edge(s) {list(bad + 1)}"
                )
    r = weights.control
    for k, (a, b) in enumerate(graph.edges):
        if a and b and r[a] != r[b]:
            raise ValueError(
                f"edge {k + 1} {a, b}: control penalties must match (r_{a}={r[a]}, r_{b}={r[b]})"
            )


def incidence_matrix(g: DirectedGraph) -> np.ndarray:
    return g._incidence.copy()


def distributed_laplacian(g: DirectedGraph, w) -> np.ndarray:
    """``D diag(w) D^T`` for one agent's per-edge weight vector ``w``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (g.m,):
        raise ValueError(f"weight vector has length {w.size}, graph has {g.m} edges")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    d = g._incidence
    return (d * w) @ d.T


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def extended_laplacian(g: DirectedGraph, w, q: int) -> np.ndarray:
    """The q-dimensional extension ``(D⊗I)(W⊗I)(D⊗I)^T``."""
    return kron(distributed_laplacian(g, w), np.eye(q))
