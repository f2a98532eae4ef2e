"""Index-sorted sparse vector used for activations and rank-1 factors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SparseVector:
    """A length-``size`` vector stored as sorted (index, value) pairs."""

    indices: np.ndarray
    values: np.ndarray
    size: int

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.indices.shape != self.values.shape:
            raise ValueError("indices and values must have matching length")
        if self.indices.size and (
            self.indices[0] < 0
            or self.indices[-1] >= self.size
            or np.any(np.diff(self.indices) <= 0)
        ):
            raise ValueError("indices must be strictly increasing within [0, size)")

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.size)
        out[self.indices] = self.values
        return out

    @classmethod
    def from_dense(cls, x: np.ndarray) -> "SparseVector":
        x = np.asarray(x, dtype=np.float64)
        idx = np.flatnonzero(x)
        return cls(idx, x[idx], x.size)


def as_index_value(y) -> tuple[np.ndarray, np.ndarray, int]:
    """View a SparseVector or dense array as (indices, values, size)."""
    if isinstance(y, SparseVector):
        return y.indices, y.values, y.size
    y = np.asarray(y, dtype=np.float64)
    return np.arange(y.size, dtype=np.int64), y, y.size
