"""Periodic approximations: torus maps turned into lattice permutations.

Two constructions are provided.  ``discretize_analytic`` composes the exact
lattice counterparts of the map's primitives.  ``discretize_matching`` works
for any map with a Lipschitz bound: each cell is connected to the cells whose
midpoints lie in a widening window around the image of its own midpoint, and
the window grows until the bipartite graph has a perfect matching.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticePartition, torus_distance
from .maps import TorusMap
from .matching import BipartiteGraph, Matching, is_perfect, max_matching

log = logging.getLogger(__name__)

_SNAP = 1e-9


@dataclass(frozen=True, eq=False)
class PermutationMap:
    """The lattice bijection: cell ``j`` is sent to cell ``target[j]``."""

    partition: LatticePartition
    target: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.ascontiguousarray(self.target, dtype=np.int64)
        object.__setattr__(self, "target", t)
        t.setflags(write=False)
        check_bijection(t, self.partition.q)

    @property
    def q(self) -> int:
        return self.partition.q

    def __len__(self):
        return self.q

    def __eq__(self, other):
        if not isinstance(other, PermutationMap):
            return NotImplemented
        return self.partition == other.partition and np.array_equal(self.target, other.target)

    def inverse_target(self) -> np.ndarray:
        inv = np.empty_like(self.target)
        inv[self.target] = np.arange(self.q, dtype=np.int64)
        return inv

    def power(self, l: int) -> np.ndarray:
        """Index map of ``T_n**l`` (negative powers use the inverse)."""
        base = self.target if l >= 0 else self.inverse_target()
        out = np.arange(self.q, dtype=np.int64)
        step = base
        k = abs(int(l))
        while k:
            if k & 1:
                out = step[out]
            step = step[step]
            k >>= 1
        return out

    @classmethod
    def identity(cls, partition: LatticePartition) -> PermutationMap:
        return cls(partition, np.arange(partition.q, dtype=np.int64), {"map": "identity"})


def check_bijection(target: np.ndarray, q: int):
    """Raise ``ValueError`` unless ``target`` is a permutation of ``0..q-1``."""
    if target.shape != (q,):
        raise ValueError(f"permutation must have {q} entries, got shape {target.shape}")
    if q and (target.min() < 0 or target.max() >= q):
        raise ValueError("permutation target out of range")
    seen = np.zeros(q, dtype=bool)
    seen[target] = True
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0])
        raise ValueError(f"not a bijection: cell {missing} is never hit")


def discretize_analytic(tmap: TorusMap, partition: LatticePartition) -> PermutationMap:
    if not tmap.is_analytic:
        raise ValueError(f"map {tmap.name!r} is a black box; use discretize_matching")
    if tmap.m != partition.m:
        raise ValueError(f"map dimension {tmap.m} does not match partition dimension {partition.m}")
    n = partition.n_tilde
    j = partition.multi_indices()
    for prim in tmap.primitives:
        j = prim.lattice(j, n)
    target = j @ partition.strides
    return PermutationMap(partition, target, {"map": tmap.name, "params": tmap.params,
                                              "mode": "analytic", "t_used": None})


def _window_lo_hi(images: np.ndarray, n: int, t: int) -> tuple[np.ndarray, np.ndarray]:
    # continuous zero-based lattice coordinate of the image; midpoints sit on integers
    z = n * images - 0.5
    zr = np.round(z)
    z = np.where(np.abs(z - zr) < _SNAP * np.maximum(1.0, np.abs(z)), zr, z)
    lo = np.floor(z).astype(np.int64) - t + 1
    hi = np.ceil(z).astype(np.int64) + t - 1
    return lo, hi


def neighborhood_graph(images: np.ndarray, partition: LatticePartition, t: int) -> BipartiteGraph:
    """Graph joining cell ``s`` to every cell in the level-``t`` window around ``images[s]``.

    Windows are wrapped mod ``n`` on every axis; rows are sorted and duplicate-free.
    """
    if t < 1:
        raise ValueError("window level t starts at 1")
    n, m, q = partition.n_tilde, partition.m, partition.q
    lo, hi = _window_lo_hi(images, n, t)
    width = min(2 * t, n)
    offs = np.arange(width, dtype=np.int64)
    strides = partition.strides

    cand = np.zeros((q, 1), dtype=np.int64)
    valid = np.ones((q, 1), dtype=bool)
    for i in range(m):
        span = np.minimum(hi[:, i] - lo[:, i] + 1, n)
        axis_idx = (lo[:, i, None] + offs) % n
        axis_ok = offs[None, :] < span[:, None]
        cand = (cand[:, :, None] + axis_idx[:, None, :] * strides[i]).reshape(q, -1)
        valid = (valid[:, :, None] & axis_ok[:, None, :]).reshape(q, -1)

    big = np.int64(q)
    cand = np.where(valid, cand, big)
    cand.sort(axis=1)
    keep = cand < big
    keep[:, 1:] &= cand[:, 1:] != cand[:, :-1]
    counts = keep.sum(axis=1)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return BipartiteGraph(q, q, indptr, cand[keep])


def discretize_matching(tmap: TorusMap, partition: LatticePartition, max_t: int | None = None
                        ) -> tuple[PermutationMap, int]:
    if tmap.m != partition.m:
        raise ValueError(f"map dimension {tmap.m} does not match partition dimension {partition.m}")
    if tmap.lipschitz_bound is None and not tmap.is_analytic:
        raise ValueError("refusing to discretize a black-box map without a Lipschitz constant")
    n = partition.n_tilde
    images = tmap.apply(partition.representative_points())
    # once 2t - 1 >= n every window is the whole axis and the graph is complete
    t_full = (n + 2) // 2
    limit = t_full if max_t is None else min(max_t, t_full)
    matching: Matching | None = None
    for t in range(1, limit + 1):
        g = neighborhood_graph(images, partition, t)
        matching = max_matching(g, initial=matching)
        log.debug("t=%d: %d edges, matched %d/%d", t, g.n_edges, matching.size, partition.q)
        if is_perfect(matching, g):
            perm = PermutationMap(partition, matching.pair_of_left,
                                  {"map": tmap.name, "params": tmap.params, "mode": "matching", "t_used": t})
            return perm, t
    raise RuntimeError(f"no perfect matching up to window level {limit}")


def termination_bound(tmap: TorusMap) -> int:
    """Window level by which the matching construction must succeed, ``ceil(L + 1/2)``."""
    return int(np.ceil(tmap.lipschitz + 0.5))


def quality_report(perm: PermutationMap, tmap: TorusMap) -> float:
    """Largest one-step displacement between ``T(x_j)`` and the midpoint of ``T_n(j)``."""
    part = perm.partition
    if tmap.m != part.m:
        raise ValueError("map and permutation dimensions differ")
    reps = part.representative_points()
    images = tmap.apply(reps)
    landed = reps[perm.target]
    return float(torus_distance(landed, images).max()) if part.q else 0.0


def discretize(tmap: TorusMap, partition: LatticePartition, mode: str = "analytic"
               ) -> tuple[PermutationMap, int | None]:
    if mode == "analytic":
        return discretize_analytic(tmap, partition), None
    if mode == "matching":
        return discretize_matching(tmap, partition)
    raise ValueError(f"unknown construction mode {mode!r}")
