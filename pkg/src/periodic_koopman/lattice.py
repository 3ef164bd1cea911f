"""Uniform box partition of the unit m-torus.

Cells are half-open boxes ``[j_i/n, (j_i+1)/n)`` indexed by zero-based
multi-indices.  Linear indices use row-major order (last coordinate fastest).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MAX_CELLS = 2**62


@dataclass(frozen=True)
class LatticePartition:
    """The grid of ``n_tilde**m`` equal-measure cells on the m-torus."""

    m: int
    n_tilde: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.m!r}")
        if int(self.n_tilde) != self.n_tilde or self.n_tilde < 1:
            raise ValueError(f"grid size must be a positive integer, got {self.n_tilde!r}")
        if int(self.n_tilde) ** int(self.m) > _MAX_CELLS:
            raise OverflowError(f"{self.n_tilde}**{self.m} cells do not fit a 64-bit index")

    @property
    def q(self) -> int:
        return int(self.n_tilde) ** int(self.m)

    @property
    def cell_measure(self) -> float:
        return 1.0 / self.q

    @property
    def cell_diameter(self) -> float:
        # Euclidean diagonal of an m-cube of side 1/n; the max-metric diameter is 1/n.
        return float(np.sqrt(self.m)) / self.n_tilde

    @property
    def strides(self) -> np.ndarray:
        n = self.n_tilde
        return np.array([n ** (self.m - 1 - i) for i in range(self.m)], dtype=np.int64)

    def _check_multi(self, j: np.ndarray) -> np.ndarray:
        j = np.asarray(j)
        if j.shape[-1:] != (self.m,):
            raise ValueError(f"multi-index must have trailing dimension {self.m}, got shape {j.shape}")
        if not np.issubdtype(j.dtype, np.integer):
            if not np.all(np.mod(j, 1) == 0):
                raise ValueError("multi-index entries must be integers")
            j = j.astype(np.int64)
        if np.any(j < 0) or np.any(j >= self.n_tilde):
            raise IndexError(f"multi-index out of range for grid size {self.n_tilde}")
        return j.astype(np.int64, copy=False)

    def linearize(self, j) -> np.ndarray | int:
        """Row-major linear index of multi-index ``j`` (shape ``(m,)`` or ``(N, m)``)."""
        j = self._check_multi(j)
        lin = j @ self.strides
        return int(lin) if lin.ndim == 0 else lin

    def delinearize(self, lin) -> np.ndarray:
        lin = np.asarray(lin, dtype=np.int64)
        if np.any(lin < 0) or np.any(lin >= self.q):
            raise IndexError(f"linear index out of range [0, {self.q})")
        return (lin[..., None] // self.strides) % self.n_tilde

    def multi_indices(self) -> np.ndarray:
        """All multi-indices in linear order, shape ``(q, m)``."""
        return self.delinearize(np.arange(self.q, dtype=np.int64))

    def representative_point(self, j) -> np.ndarray:
        """Midpoint ``(j + 1/2)/n`` of cell ``j``."""
        j = self._check_multi(j)
        return (j + 0.5) / self.n_tilde

    def representative_points(self) -> np.ndarray:
        """Midpoints of every cell in linear order, shape ``(q, m)``."""
        return (self.multi_indices() + 0.5) / self.n_tilde

    def cell_of(self, x) -> np.ndarray:
        """Multi-index of the half-open cell containing ``x`` (reduced mod 1 first)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.m,):
            raise ValueError(f"point must have trailing dimension {self.m}, got shape {x.shape}")
        j = np.floor(np.mod(x, 1.0) * self.n_tilde).astype(np.int64)
        # mod can round up to exactly 1.0 for tiny negative inputs
        return np.minimum(j, self.n_tilde - 1)


def wrap_unit(x) -> np.ndarray:
    """Reduce coordinates into ``[0, 1)``."""
    y = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.where(y >= 1.0, 0.0, y)


def torus_distance(x, y) -> np.ndarray | float:
    """Max-coordinate geodesic distance on the unit torus.

    Per axis the wrap-around distance ``min(|d|, 1 - |d|)`` is used; broadcasting
    over leading dimensions is supported.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    d = np.abs(np.mod(x - y, 1.0))
    d = np.minimum(d, 1.0 - d)
    out = d.max(axis=-1)
    return float(out) if out.ndim == 0 else out
