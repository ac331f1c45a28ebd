"""Undirected communication topologies with a fixed edge ordering."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Network:
    """Undirected simple graph on nodes ``0..n-1``.

    Edges are stored sorted as ``(i, j)`` with ``i < j``. Column ``e`` of the
    incidence matrix has ``+1`` at row ``i`` and ``-1`` at row ``j``.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"network needs at least one node, got n={self.n}")
        seen = set()
        for e in self.edges:
            i, j = e
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge {e} out of range for n={self.n} (need 0 <= i < j < n)")
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
        if list(self.edges) != sorted(self.edges):
            raise ValueError("edges must be sorted; use from_edge_list")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def incidence(self) -> np.ndarray:
        D = np.zeros((self.n, len(self.edges)))
        for col, (i, j) in enumerate(self.edges):
            D[i, col] = 1.0
            D[j, col] = -1.0
        D.setflags(write=False)
        return D

    @cached_property
    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1.0
        A.setflags(write=False)
        return A

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Tail and head index arrays, in edge order."""
        ei = np.array([e[0] for e in self.edges], dtype=np.int64)
        ej = np.array([e[1] for e in self.edges], dtype=np.int64)
        return ei, ej

    @cached_property
    def connected(self) -> bool:
        return is_connected(self)

    def as_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


def from_edge_list(n: int, edges) -> Network:
    """Canonical network from ``(i, j)`` pairs. Pairs must already satisfy ``i < j``."""
    pairs = [tuple(int(v) for v in e) for e in edges]
    for e in pairs:
        if len(e) != 2:
            raise ValueError(f"edge {e} is not a pair")
    seen = set()
    for e in pairs:
        if e in seen:
            raise ValueError(f"duplicate edge {e}")
        seen.add(e)
    return Network(int(n), tuple(sorted(pairs)))


def is_connected(net: Network) -> bool:
    """True iff a breadth-first search from node 0 reaches every node."""
    nbrs: list[list[int]] = [[] for _ in range(net.n)]
    for i, j in net.edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in nbrs[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == net.n


def _check_n(n: int) -> int:
    if int(n) != n or n < 2:
        raise ValueError(f"generator needs n >= 2, got {n}")
    return int(n)


def path(n: int) -> Network:
    n = _check_n(n)
    return from_edge_list(n, [(i, i + 1) for i in range(n - 1)])


def ring(n: int) -> Network:
    n = _check_n(n)
    edges = {(i, i + 1) for i in range(n - 1)}
    edges.add((0, n - 1))
    return from_edge_list(n, edges)


def complete(n: int) -> Network:
    n = _check_n(n)
    return from_edge_list(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star(n: int) -> Network:
    n = _check_n(n)
    return from_edge_list(n, [(0, j) for j in range(1, n)])


GENERATORS = {"ring": ring, "path": path, "complete": complete, "star": star}
