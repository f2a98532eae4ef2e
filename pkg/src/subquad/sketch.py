"""Degree-2 tensor sketches and SRHT subspace embeddings.

Both tensor transforms map a pair (x, y) in R^m x R^m to a sketch of the
outer product x (x) y in R^s without materializing the m^2-dimensional
tensor.  Hash and sign functions come from degree-2 / degree-3 polynomial
families over a Mersenne prime field, giving 3-wise and 4-wise independence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .sparse import as_index_value

_PRIME = (1 << 31) - 1
MATERIALIZE_LIMIT = 10**6


def fwht(x: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform with unnormalized +-1 entries.

    Self-inverse up to a factor of m; requires a power-of-two length.
    """
    x = np.array(x, dtype=np.float64)
    m = x.shape[0]
    if m < 1 or m & (m - 1):
        raise ValueError("fwht needs a power-of-two length")
    backend.fwht_inplace(x)
    return x


def _next_pow2(m: int) -> int:
    return 1 << max(0, (m - 1).bit_length())


def _poly_hash(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Evaluate the hash polynomial at 0..m-1 over the prime field."""
    pts = np.arange(m, dtype=np.int64)
    acc = np.zeros(m, dtype=np.int64)
    for c in coeffs:
        acc = (acc * pts + int(c)) % _PRIME
    return acc


@dataclass
class CountSketchParams:
    """One count-sketch: 3-wise independent buckets, 4-wise independent signs."""

    m: int
    s: int
    seed: int
    bucket: np.ndarray = field(init=False)
    sign: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.s < 1 or self.m < 1:
            raise ValueError("need m >= 1 and s >= 1")
        if self.m > _PRIME:
            raise ValueError("input dimension exceeds the hash field")
        rng = np.random.default_rng(self.seed)
        h_coeffs = rng.integers(0, _PRIME, size=3)
        s_coeffs = rng.integers(0, _PRIME, size=4)
        self.bucket = _poly_hash(h_coeffs, self.m) % self.s
        self.sign = (_poly_hash(s_coeffs, self.m) % 2).astype(np.float64) * 2.0 - 1.0

    def apply(self, x) -> np.ndarray:
        idx, vals, size = as_index_value(x)
        if size != self.m:
            raise ValueError("vector length does not match the sketch")
        return np.bincount(
            self.bucket[idx], weights=self.sign[idx] * vals, minlength=self.s
        )


@dataclass
class TensorSketchTransform:
    """TensorSketch of degree 2: two count sketches combined by FFT convolution.

    ``m_right`` allows sketching pairs with different lengths (m x m_right
    tensors); it defaults to ``m``.
    """

    m: int
    s: int
    seed: int
    m_right: int | None = None
    variant: str = field(default="tensorsketch", init=False)

    def __post_init__(self):
        if self.m_right is None:
            self.m_right = self.m
        s1, s2 = np.random.SeedSequence(self.seed).spawn(2)
        self.cs1 = CountSketchParams(self.m, self.s, s1.generate_state(1)[0])
        self.cs2 = CountSketchParams(self.m_right, self.s, s2.generate_state(1)[0])

    def apply(self, x, y) -> np.ndarray:
        return ts_apply(self, x, y)


def ts_apply(T: TensorSketchTransform, x, y) -> np.ndarray:
    """S (x (x) y) computed as a circular convolution of two count sketches."""
    c1 = T.cs1.apply(x)
    c2 = T.cs2.apply(y)
    return np.fft.irfft(np.fft.rfft(c1) * np.fft.rfft(c2), n=T.s)


def ts_materialize(T: TensorSketchTransform) -> np.ndarray:
    """The definitional s x (m * m_right) matrix; column (i, j) at i*m_right + j."""
    if T.m * T.m_right > MATERIALIZE_LIMIT:
        raise ValueError("materialization is restricted to small m")
    rows = (T.cs1.bucket[:, None] + T.cs2.bucket[None, :]) % T.s
    signs = T.cs1.sign[:, None] * T.cs2.sign[None, :]
    S = np.zeros((T.s, T.m * T.m_right))
    cols = np.arange(T.m * T.m_right)
    S[rows.ravel(), cols] = signs.ravel()
    return S


@dataclass
class TensorSrhtTransform:
    """TensorSRHT: S = (1/sqrt s) P (H D1 x H D2) with sampled coordinate pairs.

    ``m_right`` allows a different length on the second factor; both sides
    are zero padded to their own power of two.
    """

    m: int
    s: int
    seed: int
    m_right: int | None = None
    variant: str = field(default="tensorsrht", init=False)

    def __post_init__(self):
        if self.s < 1 or self.m < 1:
            raise ValueError("need m >= 1 and s >= 1")
        if self.m_right is None:
            self.m_right = self.m
        self.m_pad = _next_pow2(self.m)
        self.m_right_pad = _next_pow2(self.m_right)
        rng = np.random.default_rng(self.seed)
        self.d1 = rng.integers(0, 2, size=self.m_pad).astype(np.float64) * 2.0 - 1.0
        self.d2 = rng.integers(0, 2, size=self.m_right_pad).astype(np.float64) * 2.0 - 1.0
        self.rows_i = rng.integers(0, self.m_pad, size=self.s)
        self.rows_j = rng.integers(0, self.m_right_pad, size=self.s)

    def _rotate(self, d: np.ndarray, x, expect: int, pad: int) -> np.ndarray:
        idx, vals, size = as_index_value(x)
        if size != expect:
            raise ValueError("vector length does not match the transform")
        u = np.zeros(pad)
        u[idx] = d[idx] * vals
        backend.fwht_inplace(u)
        return u

    def apply(self, x, y) -> np.ndarray:
        return srht_apply(self, x, y)


def srht_apply(T: TensorSrhtTransform, x, y) -> np.ndarray:
    """out_r = (H D1 x)_{i_r} (H D2 y)_{j_r} / sqrt(s)."""
    u = T._rotate(T.d1, x, T.m, T.m_pad)
    v = T._rotate(T.d2, y, T.m_right, T.m_right_pad)
    return u[T.rows_i] * v[T.rows_j] / math.sqrt(T.s)


def srht_materialize(T: TensorSrhtTransform) -> np.ndarray:
    """Definitional s x (m * m_right) matrix of the TensorSRHT (test oracle)."""
    if T.m * T.m_right > MATERIALIZE_LIMIT:
        raise ValueError("materialization is restricted to small m")
    left = _hadamard(T.m_pad)[T.rows_i][:, : T.m] * T.d1[: T.m]
    right = _hadamard(T.m_right_pad)[T.rows_j][:, : T.m_right] * T.d2[: T.m_right]
    return (left[:, :, None] * right[:, None, :]).reshape(T.s, -1) / math.sqrt(T.s)


def _hadamard(m: int) -> np.ndarray:
    H = np.ones((1, 1))
    while H.shape[0] < m:
        H = np.block([[H, H], [H, -H]])
    return H


def sketch_jacobian(u_list, v_list, T) -> np.ndarray:
    """Row i of the result is the sketch of u_i (x) v_i."""
    if len(u_list) != len(v_list):
        raise ValueError("u_list and v_list must have equal length")
    return np.array([T.apply(u, v) for u, v in zip(u_list, v_list)])


@dataclass
class SubspaceEmbedTransform:
    """SRHT subspace embedding of R^N into R^s (rows padded to a power of two)."""

    n_in: int
    s: int
    seed: int

    def __post_init__(self):
        if self.s < 1 or self.n_in < 1:
            raise ValueError("need n_in >= 1 and s >= 1")
        self.n_pad = _next_pow2(self.n_in)
        rng = np.random.default_rng(self.seed)
        self.sign = rng.integers(0, 2, size=self.n_in).astype(np.float64) * 2.0 - 1.0
        self.rows = rng.integers(0, self.n_pad, size=self.s)

    def apply(self, M: np.ndarray) -> np.ndarray:
        return embed_apply(self, M)


def embed_apply(E: SubspaceEmbedTransform, M: np.ndarray) -> np.ndarray:
    """Embed the columns of M: (H D M)[sampled rows] / sqrt(s)."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if M.shape[0] != E.n_in:
        raise ValueError("row count does not match the embedding")
    if M.shape[1] > E.s:
        raise ValueError("embedding target is smaller than the column count")
    buf = np.zeros((M.shape[1], E.n_pad))
    buf[:, : E.n_in] = (E.sign[:, None] * M).T
    backend.fwht_inplace_rows(buf)
    return buf[:, E.rows].T / math.sqrt(E.s)
