"""Shifted-ReLU network: configuration, initialization, sparse forward pass.

The activation is phi(x) = sqrt(c_b) * 1[x > tau] * x with threshold
tau = sqrt(2/m) * b, so each neuron fires with probability 1 - Phi(b)
independent of the width m.  The scale c_b = (2 * (1 - Phi(b) + b * pdf(b)))^-1
makes E||phi(Wx)||^2 = 1 for unit x under N(0, 2/m) weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import backend
from .sparse import SparseVector

UNIT_NORM_TOL = 1e-8


def _norm_cdf(b: float) -> float:
    return 0.5 * math.erfc(-b / math.sqrt(2.0))


def _norm_pdf(b: float) -> float:
    return math.exp(-0.5 * b * b) / math.sqrt(2.0 * math.pi)


@lru_cache(maxsize=256)
def shift_scale(b: float) -> float:
    """Activation scale c_b = (2(1 - Phi(b) + b pdf(b)))^-1 for shift b >= 0."""
    if not (b >= 0.0 and math.isfinite(b)):
        raise ValueError("shift b must be finite and nonnegative")
    return 1.0 / (2.0 * (1.0 - _norm_cdf(b) + b * _norm_pdf(b)))


@dataclass(frozen=True)
class NetConfig:
    d: int
    m: int
    L: int
    b: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.m < 1 or self.L < 1:
            raise ValueError("d, m and L must all be >= 1")
        if not (self.b >= 0.0 and math.isfinite(self.b)):
            raise ValueError("shift b must be finite and nonnegative")


@dataclass
class Weights:
    """Network parameters: L weight matrices, sign vector a, activation scale."""

    layers: list[np.ndarray]
    a: np.ndarray
    scale: float
    config: NetConfig

    @property
    def threshold(self) -> float:
        return math.sqrt(2.0 / self.config.m) * self.config.b


@dataclass
class ActivationMask:
    """Support of D = diag(phi'(g)): sqrt(c_b) at active coordinates, else 0."""

    active: np.ndarray
    scale: float

    def apply(self, w: np.ndarray) -> SparseVector:
        return SparseVector(self.active, self.scale * w[self.active], w.size)


@dataclass
class ForwardCache:
    """Per-layer pre-activations, sparse activations, masks and prediction."""

    x: np.ndarray
    g: list[np.ndarray] = field(default_factory=list)
    h: list[SparseVector] = field(default_factory=list)
    masks: list[ActivationMask] = field(default_factory=list)
    f: float = 0.0

    def layer_g(self, layer: int) -> np.ndarray:
        return self.g[layer - 1]

    def layer_h(self, layer: int) -> SparseVector:
        return self.h[layer - 1]

    def layer_mask(self, layer: int) -> ActivationMask:
        return self.masks[layer - 1]

    def input_to(self, layer: int):
        """The vector feeding layer ``layer``: x for layer 1, else h_{layer-1}."""
        return self.x if layer == 1 else self.h[layer - 2]


def init_network(cfg: NetConfig) -> Weights:
    """Draw W_l with i.i.d. N(0, 2/m) entries and a with uniform +-1 entries.

    Each layer consumes its own spawned RNG stream, so the draw for layer l
    does not depend on evaluation order.
    """
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.L + 1)
    sd = math.sqrt(2.0 / cfg.m)
    layers = []
    for ell in range(cfg.L):
        fan_in = cfg.d if ell == 0 else cfg.m
        rng = np.random.Generator(np.random.SFC64(streams[ell]))
        layers.append(sd * rng.standard_normal((cfg.m, fan_in)))
    rng = np.random.Generator(np.random.SFC64(streams[cfg.L]))
    a = rng.integers(0, 2, size=cfg.m).astype(np.float64) * 2.0 - 1.0
    return Weights(layers=layers, a=a, scale=shift_scale(cfg.b), config=cfg)


def activate(g: np.ndarray, b: float) -> tuple[SparseVector, ActivationMask]:
    """Threshold g at tau = sqrt(2/m) b and rescale survivors by sqrt(c_b)."""
    m = g.shape[0]
    tau = math.sqrt(2.0 / m) * b
    root_scale = math.sqrt(shift_scale(b))
    active = np.flatnonzero(g > tau)
    mask = ActivationMask(active=active, scale=root_scale)
    h = SparseVector(active, root_scale * g[active], m)
    return h, mask


def _check_unit(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if abs(np.linalg.norm(x) - 1.0) > UNIT_NORM_TOL:
        raise ValueError("input is not unit-norm; normalize the data first")
    return x


def forward(weights: Weights, x: np.ndarray) -> ForwardCache:
    """Sparse forward pass; layer l >= 2 costs O(m * nnz(h_{l-1}))."""
    x = _check_unit(x)
    cfg = weights.config
    cache = ForwardCache(x=x)
    g = weights.layers[0] @ x
    for ell in range(1, cfg.L + 1):
        if ell > 1:
            prev = cache.h[-1]
            g = backend.colsub_matvec(weights.layers[ell - 1], prev.indices, prev.values)
        h, mask = activate(g, cfg.b)
        cache.g.append(g)
        cache.h.append(h)
        cache.masks.append(mask)
    last = cache.h[-1]
    cache.f = float(weights.a[last.indices] @ last.values)
    return cache


def forward_dense(weights: Weights, x: np.ndarray) -> ForwardCache:
    """Dense-oracle forward: full m x m matvecs, no sparsity shortcuts."""
    x = _check_unit(x)
    cfg = weights.config
    cache = ForwardCache(x=x)
    vec = x
    for ell in range(1, cfg.L + 1):
        g = weights.layers[ell - 1] @ vec
        h, mask = activate(g, cfg.b)
        cache.g.append(g)
        cache.h.append(h)
        cache.masks.append(mask)
        vec = h.to_dense()
    cache.f = float(weights.a @ vec)
    return cache


def predict_and_loss(
    weights: Weights, X: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, float]:
    """Predictions for unit columns of X and the squared loss 0.5 sum (y-f)^2."""
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[1]
    if y.shape != (n,):
        raise ValueError("y must have one entry per column of X")
    f = np.array([forward(weights, X[:, i]).f for i in range(n)])
    return f, 0.5 * float(np.sum((y - f) ** 2))


def expected_active(m: int, b: float) -> tuple[float, float]:
    """Expected firing count m(1 - Phi(b)) and the tail bound m e^{-b^2/2}."""
    if m < 1 or b < 0:
        raise ValueError("need m >= 1 and b >= 0")
    return m * (1.0 - _norm_cdf(b)), m * math.exp(-0.5 * b * b)


def truncated_gaussian_stats(b: float) -> tuple[float, float]:
    """Mean and variance of a standard Gaussian conditioned on exceeding b."""
    if not math.isfinite(b):
        raise ValueError("b must be finite")
    tail = 1.0 - _norm_cdf(b)
    mean = _norm_pdf(b) / tail
    var = 1.0 + b * mean - mean * mean
    return mean, var
