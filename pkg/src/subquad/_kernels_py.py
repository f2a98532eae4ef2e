"""Pure-numpy implementations of the hot kernels.

Signature-compatible with the compiled module ``subquad._ckernels``; the
active implementation is chosen in :mod:`subquad.backend`.
"""
from __future__ import annotations

import numpy as np

NAME = "python"


def fwht_inplace(x: np.ndarray) -> None:
    """In-place Walsh-Hadamard butterfly with unnormalized +-1 entries.

    Length must be a power of two (enforced by the caller).
    """
    n = x.shape[0]
    h = 1
    while h < n:
        blocks = x.reshape(n // (2 * h), 2, h)
        top = blocks[:, 0, :] + blocks[:, 1, :]
        bot = blocks[:, 0, :] - blocks[:, 1, :]
        blocks[:, 0, :] = top
        blocks[:, 1, :] = bot
        h *= 2


def fwht_inplace_rows(a: np.ndarray) -> None:
    """Apply the Walsh-Hadamard butterfly to every row of a 2-D array."""
    n = a.shape[1]
    h = 1
    while h < n:
        blocks = a.reshape(a.shape[0], n // (2 * h), 2, h)
        top = blocks[:, :, 0, :] + blocks[:, :, 1, :]
        bot = blocks[:, :, 0, :] - blocks[:, :, 1, :]
        blocks[:, :, 0, :] = top
        blocks[:, :, 1, :] = bot
        h *= 2


def colsub_matvec(w: np.ndarray, idx: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """W[:, idx] @ vals without touching the other columns."""
    if idx.size == 0:
        return np.zeros(w.shape[0])
    return w[:, idx] @ vals


def rowsub_matvec(w: np.ndarray, idx: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """W[idx, :].T @ vals, i.e. a sparse combination of rows of W."""
    if idx.size == 0:
        return np.zeros(w.shape[1])
    return vals @ w[idx, :]
