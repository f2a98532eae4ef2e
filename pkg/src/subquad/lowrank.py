"""Lazy low-rank maintenance of per-layer weight deltas.

The logical weight of layer l is base_l + sum_j U_j V_j^T, kept exact.  Factor
blocks accumulate until the total rank reaches the restart threshold, at which
point they are folded into the base (a "flush").  Queries never materialize
the delta: they cost O(m * (nnz(y) + rank)).
"""
from __future__ import annotations

import time

import numpy as np

from . import backend
from .sparse import as_index_value


class LowRankWeights:
    """Base matrices plus accumulated (U, V) factor blocks per layer.

    Layers are numbered 1..L to match the network convention.  Queries are
    read-only; updates and flushes require exclusive access (callers
    serialize mutation).
    """

    def __init__(self, matrices: list[np.ndarray], threshold: int):
        if threshold < 1:
            raise ValueError("restart threshold must be >= 1")
        self.bases = [np.array(w, dtype=np.float64) for w in matrices]
        self.factors: list[list[tuple[np.ndarray, np.ndarray]]] = [
            [] for _ in matrices
        ]
        self.ranks = [0 for _ in matrices]
        self.threshold = int(threshold)
        self.flush_count = 0
        self.flush_seconds = 0.0

    @classmethod
    def from_weights(cls, weights, threshold: int) -> "LowRankWeights":
        return cls(weights.layers, threshold)

    @property
    def num_layers(self) -> int:
        return len(self.bases)

    def rank(self, layer: int) -> int:
        return self.ranks[layer - 1]

    def update(self, layer: int, U: np.ndarray, V: np.ndarray) -> None:
        """Append the block delta U V^T; flush once rank reaches the threshold."""
        base = self.bases[layer - 1]
        U = np.ascontiguousarray(U, dtype=np.float64)
        V = np.ascontiguousarray(V, dtype=np.float64)
        if U.ndim != 2 or V.ndim != 2 or U.shape[1] != V.shape[1] or U.shape[1] < 1:
            raise ValueError("U and V must be matrices with matching width >= 1")
        if U.shape[0] != base.shape[0] or V.shape[0] != base.shape[1]:
            raise ValueError("factor dimensions do not match the layer")
        self.factors[layer - 1].append((U.copy(), V.copy()))
        self.ranks[layer - 1] += U.shape[1]
        if self.ranks[layer - 1] >= self.threshold:
            self.flush(layer)

    def query(self, layer: int, y) -> np.ndarray:
        """(base + sum U V^T) y, using only the columns at support(y)."""
        base = self.bases[layer - 1]
        idx, vals, size = as_index_value(y)
        if size != base.shape[1]:
            raise ValueError("query vector length does not match the layer")
        out = backend.colsub_matvec(base, idx, vals)
        for U, V in self.factors[layer - 1]:
            out += U @ backend.rowsub_matvec(V, idx, vals)
        return out

    def query_transpose(self, layer: int, y) -> np.ndarray:
        """(base + sum U V^T)^T y via V (U^T y)."""
        base = self.bases[layer - 1]
        idx, vals, size = as_index_value(y)
        if size != base.shape[0]:
            raise ValueError("query vector length does not match the layer")
        out = backend.rowsub_matvec(base, idx, vals)
        for U, V in self.factors[layer - 1]:
            out += V @ backend.rowsub_matvec(U, idx, vals)
        return out

    def flush(self, layer: int) -> None:
        """Fold all factor blocks into the base via one rectangular multiply."""
        blocks = self.factors[layer - 1]
        if not blocks:
            return
        t0 = time.perf_counter()
        base = self.bases[layer - 1]
        U = blocks[0][0] if len(blocks) == 1 else np.hstack([u for u, _ in blocks])
        V = blocks[0][1] if len(blocks) == 1 else np.hstack([v for _, v in blocks])
        base += U @ V.T
        blocks.clear()
        self.ranks[layer - 1] = 0
        self.flush_count += 1
        self.flush_seconds += time.perf_counter() - t0

    def to_dense(self, layer: int) -> np.ndarray:
        """Materialize base + sum U V^T (test oracle; O(m^2 rank))."""
        out = self.bases[layer - 1].copy()
        for U, V in self.factors[layer - 1]:
            out += U @ V.T
        return out
