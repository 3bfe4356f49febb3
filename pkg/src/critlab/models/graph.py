"""Explicit graphs: union-find components, adjacency, edge-list text IO."""
from __future__ import annotations

import heapq
from collections import deque
from pathlib import Path

import numpy as np
from numba import njit

from ..errors import ParameterError


@njit(cache=True)
def uf_find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def uf_union(parent, size, a, b):
    ra = uf_find(parent, a)
    rb = uf_find(parent, b)
    if ra == rb:
        return ra
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    return ra


@njit(cache=True)
def uf_new(n):
    parent = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    return parent, size


@njit(cache=True)
def _component_sizes(n, edges):
    parent, size = uf_new(n)
    for i in range(edges.shape[0]):
        uf_union(parent, size, edges[i, 0], edges[i, 1])
    count = 0
    for v in range(n):
        if parent[v] == v:
            count += 1
    out = np.empty(count, dtype=np.int64)
    k = 0
    for v in range(n):
        if parent[v] == v:
            out[k] = size[v]
            k += 1
    return out


def as_edge_array(edges) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParameterError("edges must be a sequence of (u, v) pairs")
    return arr


def components_unionfind(n: int, edges) -> np.ndarray:
    """Component sizes, largest first."""
    arr = as_edge_array(edges)
    if n < 0:
        raise ParameterError("n must be nonnegative")
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ParameterError("vertex id out of range")
    sizes = _component_sizes(np.int64(n), arr)
    return np.sort(sizes)[::-1]


def adjacency(n: int, edges) -> tuple[np.ndarray, np.ndarray]:
    """CSR adjacency (indptr, indices); loops and multi-edges kept."""
    arr = as_edge_array(edges)
    deg = np.zeros(n + 1, dtype=np.int64)
    np.add.at(deg, arr[:, 0] + 1, 1)
    np.add.at(deg, arr[:, 1] + 1, 1)
    indptr = np.cumsum(deg)
    indices = np.empty(indptr[-1], dtype=np.int64)
    fill = indptr[:-1].copy()
    for u, v in arr:
        indices[fill[u]] = v
        fill[u] += 1
        indices[fill[v]] = u
        fill[v] += 1
    return indptr, indices


def degrees(n: int, edges) -> np.ndarray:
    arr = as_edge_array(edges)
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, arr[:, 0], 1)
    np.add.at(deg, arr[:, 1], 1)
    return deg


def write_edge_list(path, n: int, edges) -> None:
    arr = as_edge_array(edges)
    lines = [f"{n} {len(arr)}"] + [f"{u} {v}" for u, v in arr]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_edge_list(path) -> tuple[int, np.ndarray]:
    rows = Path(path).read_text().split("\n")
    head = rows[0].split()
    if len(head) != 2:
        raise ParameterError("edge list header must be 'n m_edges'")
    n, m = int(head[0]), int(head[1])
    body = [r.split() for r in rows[1:] if r.strip()]
    if len(body) != m:
        raise ParameterError(f"expected {m} edges, found {len(body)}")
    arr = np.array([[int(a), int(b)] for a, b in body], dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ParameterError("vertex id out of range")
    return n, arr


class GraphStepper:
    """Vertex exploration of an explicit graph.

    ``order="fifo"`` explores active vertices in activation order;
    ``order="min"`` always takes the smallest-labelled active vertex, and new
    components start from the smallest unseen label.
    """

    vertex_consuming = True
    R0 = 1

    def __init__(self, n: int, edges, order: str = "fifo"):
        if order not in ("fifo", "min"):
            raise ParameterError("order must be 'fifo' or 'min'")
        self.n = int(n)
        self.indptr, self.indices = adjacency(self.n, edges)
        self.order = order
        self.reset()

    def reset(self):
        self.status = np.zeros(self.n, dtype=np.int8)  # 0 unseen, 1 active, 2 explored
        self.queue = deque() if self.order == "fifo" else []
        self.scan = 0
        self._push(0)

    def _push(self, v):
        self.status[v] = 1
        if self.order == "fifo":
            self.queue.append(v)
        else:
            heapq.heappush(self.queue, v)

    def _pop(self):
        return self.queue.popleft() if self.order == "fifo" else heapq.heappop(self.queue)

    def draw(self, state, rng=None):
        if state.R == 0:
            while self.scan < self.n and self.status[self.scan] != 0:
                self.scan += 1
            if self.scan >= self.n:
                return None
            self._push(self.scan)
        v = self._pop()
        self.status[v] = 2
        eta = 0
        for w in self.indices[self.indptr[v]:self.indptr[v + 1]]:
            if self.status[w] == 0:
                self._push(w)
                eta += 1
        return eta
