"""Maximum-cardinality bipartite matching (Hopcroft-Karp).

Adjacency is stored in CSR form (``indptr``/``indices``).  Traversal is in
ascending vertex order everywhere, so results are reproducible for a fixed
adjacency ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNMATCHED = -1


@dataclass(frozen=True)
class BipartiteGraph:
    n_left: int
    n_right: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        if self.n_left < 0 or self.n_right < 0:
            raise ValueError("vertex counts must be non-negative")
        if len(self.indptr) != self.n_left + 1 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ValueError("malformed CSR offsets")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.n_right):
            raise ValueError("right-vertex id out of range")

    @classmethod
    def from_edges(cls, n_left: int, n_right: int, edges) -> BipartiteGraph:
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if len(edges) and (edges[:, 0].min() < 0 or edges[:, 0].max() >= n_left):
            raise ValueError("left-vertex id out of range")
        if len(edges) and (edges[:, 1].min() < 0 or edges[:, 1].max() >= n_right):
            raise ValueError("right-vertex id out of range")
        # sort by (left, right) and drop duplicates
        key = np.unique(edges[:, 0] * max(n_right, 1) + edges[:, 1]) if len(edges) else np.empty(0, np.int64)
        left = key // max(n_right, 1)
        right = key % max(n_right, 1)
        indptr = np.zeros(n_left + 1, dtype=np.int64)
        np.add.at(indptr, left + 1, 1)
        return cls(n_left, n_right, np.cumsum(indptr), right.astype(np.int64))

    @classmethod
    def from_adjacency(cls, n_right: int, adjacency) -> BipartiteGraph:
        edges = [(u, v) for u, nbrs in enumerate(adjacency) for v in nbrs]
        return cls.from_edges(len(adjacency), n_right, edges)

    @property
    def n_edges(self) -> int:
        return len(self.indices)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def is_subgraph_of(self, other: BipartiteGraph) -> bool:
        if (self.n_left, self.n_right) != (other.n_left, other.n_right):
            return False
        return all(np.isin(self.neighbors(u), other.neighbors(u)).all() for u in range(self.n_left))


@dataclass(frozen=True)
class Matching:
    pair_of_left: np.ndarray
    n_right: int

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.pair_of_left != UNMATCHED))

    def pair_of_right(self) -> np.ndarray:
        out = np.full(self.n_right, UNMATCHED, dtype=np.int64)
        left = np.flatnonzero(self.pair_of_left != UNMATCHED)
        out[self.pair_of_left[left]] = left
        return out

    def is_valid(self, g: BipartiteGraph | None = None) -> bool:
        matched = self.pair_of_left[self.pair_of_left != UNMATCHED]
        if len(np.unique(matched)) != len(matched):
            return False
        if g is not None:
            for u, v in enumerate(self.pair_of_left):
                if v != UNMATCHED and v not in g.neighbors(u):
                    return False
        return True


def max_matching(g: BipartiteGraph, initial: Matching | None = None) -> Matching:
    """Hopcroft-Karp; ``initial`` (a valid matching of ``g``) warm-starts the search."""
    n_left, n_right = g.n_left, g.n_right
    indptr = g.indptr.tolist()
    adj = g.indices.tolist()
    if initial is not None:
        match_l = [int(v) for v in initial.pair_of_left]
        match_r = [UNMATCHED] * n_right
        for u, v in enumerate(match_l):
            if v != UNMATCHED:
                match_r[v] = u
    else:
        match_l = [UNMATCHED] * n_left
        match_r = [UNMATCHED] * n_right
        # greedy seed: smallest free neighbor, ascending left order
        for u in range(n_left):
            for k in range(indptr[u], indptr[u + 1]):
                v = adj[k]
                if match_r[v] == UNMATCHED:
                    match_l[u] = v
                    match_r[v] = u
                    break

    inf = n_left + 1
    dist = [inf] * n_left

    def bfs() -> int:
        queue = []
        for u in range(n_left):
            if match_l[u] == UNMATCHED:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = inf
        found = inf
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            du = dist[u]
            if du >= found:
                continue
            for k in range(indptr[u], indptr[u + 1]):
                x = match_r[adj[k]]
                if x == UNMATCHED:
                    if found == inf:
                        found = du + 1
                elif dist[x] == inf:
                    dist[x] = du + 1
                    queue.append(x)
        return found

    def augment(root: int, found: int, ptr: list) -> bool:
        stack_u = [root]
        stack_v = []
        while stack_u:
            u = stack_u[-1]
            pushed = False
            end = indptr[u + 1]
            while ptr[u] < end:
                v = adj[ptr[u]]
                ptr[u] += 1
                x = match_r[v]
                if x == UNMATCHED:
                    if dist[u] + 1 == found:
                        stack_v.append(v)
                        for uu, vv in zip(stack_u, stack_v):
                            match_l[uu] = vv
                            match_r[vv] = uu
                        return True
                elif dist[x] == dist[u] + 1:
                    stack_u.append(x)
                    stack_v.append(v)
                    pushed = True
                    break
            if not pushed:
                dist[u] = inf
                stack_u.pop()
                if stack_v:
                    stack_v.pop()
        return False

    while True:
        found = bfs()
        if found == inf:
            break
        ptr = indptr[:-1].copy()
        progress = False
        for u in range(n_left):
            if match_l[u] == UNMATCHED and augment(u, found, ptr):
                progress = True
        if not progress:
            break

    return Matching(np.asarray(match_l, dtype=np.int64), n_right)


def has_augmenting_path(g: BipartiteGraph, matching: Matching) -> bool:
    """Plain alternating BFS from all free left vertices (maximality check)."""
    match_r = matching.pair_of_right()
    seen_left = np.zeros(g.n_left, dtype=bool)
    frontier = [u for u in range(g.n_left) if matching.pair_of_left[u] == UNMATCHED]
    for u in frontier:
        seen_left[u] = True
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.neighbors(u):
                x = match_r[v]
                if x == UNMATCHED:
                    return True
                if not seen_left[x]:
                    seen_left[x] = True
                    nxt.append(int(x))
        frontier = nxt
    return False


def is_perfect(matching: Matching, g: BipartiteGraph) -> bool:
    return g.n_left == g.n_right and matching.size == g.n_left
