"""Closed-form NTK kernels and exact finite-width Jacobian/Gram oracles.

The closed forms apply to the plain ReLU case (shift b = 0, scale 1); for
b > 0 the defining Gaussian expectations are evaluated by Monte Carlo with
the width-free activation x -> sqrt(c_b) 1[x > sqrt(2) b] x under covariance
2 Sigma, which keeps the kernel diagonal at exactly 1 for unit inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .net import Weights, ForwardCache, shift_scale
from .solver import gram_exact


@dataclass
class KernelStack:
    """Kernels K_0..K_L and the smallest eigenvalue of the last one."""

    kernels: list[np.ndarray]
    lambda_L: float
    stderr: list[np.ndarray] | None = None


def f_theta(theta: float) -> float:
    """Arc-cosine kernel of degree 1: (sin t + (pi - t) cos t) / (2 pi) on [0, pi]."""
    if not (-1e-12 <= theta <= math.pi + 1e-12):
        raise ValueError("theta must lie in [0, pi]")
    theta = min(max(theta, 0.0), math.pi)
    return (math.sin(theta) + (math.pi - theta) * math.cos(theta)) / (2.0 * math.pi)


def relu_prime_corr(rho: float) -> float:
    """P[g1 > 0, g2 > 0] for standard Gaussians with correlation rho."""
    if not (-1.0 - 1e-12 <= rho <= 1.0 + 1e-12):
        raise ValueError("correlation must lie in [-1, 1]")
    rho = min(max(rho, -1.0), 1.0)
    return 0.25 + math.asin(rho) / (2.0 * math.pi)


def _check_unit_columns(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if np.max(np.abs(np.linalg.norm(X, axis=0) - 1.0)) > 1e-8:
        raise ValueError("columns of X must be unit-norm")
    return X


def _correlations(K: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.diag(K))
    rho = K / np.outer(d, d)
    return np.clip(rho, -1.0, 1.0)


def ntk_kernels(X: np.ndarray, L: int) -> KernelStack:
    """Closed-form kernel recursion for the b = 0 (plain ReLU) network."""
    X = _check_unit_columns(X)
    if L < 1:
        raise ValueError("L must be >= 1")
    K = X.T @ X
    kernels = [K]
    for _ in range(1, L):
        d = np.sqrt(np.diag(K))
        theta = np.arccos(_correlations(K))
        F = np.vectorize(f_theta)(theta)
        K = 2.0 * np.outer(d, d) * F
        kernels.append(K)
    rho = _correlations(kernels[-1])
    K_last = np.vectorize(relu_prime_corr)(rho)
    kernels.append(K_last)
    return KernelStack(kernels=kernels, lambda_L=min_eigenvalue(K_last))


def ntk_kernels_mc(
    X: np.ndarray, L: int, b: float, samples: int, seed: int = 0
) -> KernelStack:
    """Monte-Carlo kernel recursion for arbitrary shift b >= 0.

    Entries for i <= j reuse one sample block per pair, so the output is
    symmetric exactly.  Standard errors are attached per entry.
    """
    X = _check_unit_columns(X)
    if samples < 10**4:
        raise ValueError("use at least 1e4 samples")
    n = X.shape[1]
    cb = shift_scale(b)
    root_cb = math.sqrt(cb)
    cut = math.sqrt(2.0) * b
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    K = X.T @ X
    kernels = [K]
    errs = [np.zeros((n, n))]
    for level in range(1, L + 1):
        prev = kernels[-1]
        out = np.zeros((n, n))
        err = np.zeros((n, n))
        last = level == L
        for i in range(n):
            for j in range(i, n):
                cov = 2.0 * np.array(
                    [[prev[i, i], prev[i, j]], [prev[i, j], prev[j, j]]]
                )
                chol = _safe_cholesky(cov)
                z = rng.standard_normal((samples, 2)) @ chol.T
                if last:
                    vals = cb * ((z[:, 0] > cut) & (z[:, 1] > cut)).astype(np.float64)
                else:
                    p1 = root_cb * np.where(z[:, 0] > cut, z[:, 0], 0.0)
                    p2 = root_cb * np.where(z[:, 1] > cut, z[:, 1], 0.0)
                    vals = p1 * p2
                out[i, j] = out[j, i] = vals.mean()
                err[i, j] = err[j, i] = vals.std(ddof=1) / math.sqrt(samples)
        kernels.append(out)
        errs.append(err)
    sym = 0.5 * (kernels[-1] + kernels[-1].T)
    return KernelStack(
        kernels=kernels, lambda_L=float(np.linalg.eigvalsh(sym)[0]), stderr=errs
    )


def _safe_cholesky(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, Q = np.linalg.eigh(cov)
        return Q * np.sqrt(np.maximum(w, 0.0))


def exact_jacobian_uv(
    weights: Weights, caches: list[ForwardCache], layer: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Dense rank-1 factors of the layer Jacobian: row i is vec(u_i v_i^T).

    u_i = D_{i,l} (prod_{k=l+1}^L W_k^T D_{i,k}) a computed right to left;
    v_i is the input feeding layer l.
    """
    L = weights.config.L
    if not 1 <= layer <= L:
        raise ValueError("layer out of range")
    pairs = []
    for cache in caches:
        w = weights.a.copy()
        for k in range(L, layer, -1):
            w = cache.layer_mask(k).apply(w).to_dense()
            w = weights.layers[k - 1].T @ w
        u = cache.layer_mask(layer).apply(w).to_dense()
        vin = cache.input_to(layer)
        v = vin.to_dense() if hasattr(vin, "to_dense") else np.array(vin, dtype=np.float64)
        pairs.append((u, v))
    return pairs


def exact_gram(weights: Weights, caches: list[ForwardCache], layer: int) -> np.ndarray:
    """J_l J_l^T from the exact rank-1 factors; symmetric PSD."""
    pairs = exact_jacobian_uv(weights, caches, layer)
    return gram_exact([u for u, _ in pairs], [v for _, v in pairs])


def min_eigenvalue(G: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    G = np.asarray(G, dtype=np.float64)
    scale = max(np.max(np.abs(G)), 1.0)
    if np.max(np.abs(G - G.T)) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(0.5 * (G + G.T))[0])
