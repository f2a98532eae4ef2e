"""Kernel oracles: closed forms, Monte-Carlo cross-checks, exact Jacobians."""
import math

import numpy as np
import pytest

from subquad import (
    NetConfig,
    exact_gram,
    exact_jacobian_uv,
    f_theta,
    forward,
    init_network,
    min_eigenvalue,
    ntk_kernels,
    ntk_kernels_mc,
    relu_prime_corr,
)


def unit_columns(d, n, seed):
    X = np.random.default_rng(seed).standard_normal((d, n))
    return X / np.linalg.norm(X, axis=0)


def test_f_theta_values():
    assert f_theta(0.0) == pytest.approx(0.5, abs=1e-15)
    assert f_theta(math.pi) == pytest.approx(0.0, abs=1e-15)
    assert f_theta(math.pi / 2) == pytest.approx(1.0 / (2.0 * math.pi), abs=1e-15)
    with pytest.raises(ValueError):
        f_theta(-0.1)
    with pytest.raises(ValueError):
        f_theta(math.pi + 0.1)


def test_relu_prime_corr_values():
    assert relu_prime_corr(0.0) == pytest.approx(0.25, abs=1e-15)
    assert relu_prime_corr(1.0) == pytest.approx(0.5, abs=1e-15)
    assert relu_prime_corr(0.5) == pytest.approx(0.25 + 1.0 / 12.0, abs=1e-12)
    with pytest.raises(ValueError):
        relu_prime_corr(1.5)


def test_ntk_kernels_identical_inputs():
    x = np.array([[1.0], [0.0]])
    X = np.column_stack([x, x])
    stack = ntk_kernels(X, L=2)
    for K in stack.kernels[:-1]:
        assert np.allclose(K, np.ones((2, 2)), atol=1e-12)
    assert np.allclose(stack.kernels[-1], 0.5 * np.ones((2, 2)), atol=1e-12)


def test_ntk_kernels_orthogonal_inputs():
    X = np.eye(4)[:, :2]
    stack = ntk_kernels(X, L=2)
    assert stack.kernels[1][0, 1] == pytest.approx(1.0 / math.pi, abs=1e-12)
    assert stack.kernels[1][0, 0] == pytest.approx(1.0, abs=1e-12)


def test_ntk_kernels_rejects_non_unit():
    with pytest.raises(ValueError):
        ntk_kernels(2.0 * np.eye(3), L=1)


def test_ntk_mc_matches_closed_form():
    X = unit_columns(6, 2, seed=3)
    stack = ntk_kernels(X, L=2)
    mc = ntk_kernels_mc(X, L=2, b=0.0, samples=10**6, seed=5)
    for lvl in (1, 2):
        dev = np.abs(mc.kernels[lvl] - stack.kernels[lvl])
        assert np.all(dev <= 3.0 * mc.stderr[lvl] + 1e-9)


def test_ntk_mc_diag_normalization_shifted():
    # activation-kernel levels keep unit diagonal for any shift, by c_b
    X = unit_columns(5, 3, seed=4)
    mc = ntk_kernels_mc(X, L=2, b=0.7, samples=2 * 10**5, seed=6)
    diag = np.diag(mc.kernels[1])
    se = np.diag(mc.stderr[1])
    assert np.all(np.abs(diag - 1.0) <= 3.0 * se)


def test_ntk_mc_symmetry_exact():
    X = unit_columns(4, 4, seed=7)
    mc = ntk_kernels_mc(X, L=2, b=0.3, samples=10**4, seed=8)
    for K in mc.kernels:
        assert np.array_equal(K, K.T)


def test_ntk_mc_sample_floor():
    with pytest.raises(ValueError):
        ntk_kernels_mc(np.eye(2), L=1, b=0.0, samples=100)


def test_exact_jacobian_last_layer_is_masked_sign_vector():
    cfg = NetConfig(d=4, m=16, L=2, b=0.2, seed=9)
    w = init_network(cfg)
    X = unit_columns(4, 3, seed=10)
    caches = [forward(w, X[:, i]) for i in range(3)]
    pairs = exact_jacobian_uv(w, caches, 2)
    root = math.sqrt(w.scale)
    for cache, (u, v) in zip(caches, pairs):
        mask = cache.layer_mask(2)
        expect = np.zeros(16)
        expect[mask.active] = root * w.a[mask.active]
        assert np.allclose(u, expect, atol=1e-15)
        assert np.allclose(v, cache.layer_h(1).to_dense(), atol=1e-15)


def test_exact_jacobian_single_layer():
    cfg = NetConfig(d=3, m=8, L=1, b=0.1, seed=11)
    w = init_network(cfg)
    x = np.array([1.0, 0.0, 0.0])
    cache = forward(w, x)
    (u, v) = exact_jacobian_uv(w, [cache], 1)[0]
    assert np.allclose(v, x, atol=1e-15)
    root = math.sqrt(w.scale)
    expect = np.zeros(8)
    expect[cache.layer_mask(1).active] = root * w.a[cache.layer_mask(1).active]
    assert np.allclose(u, expect, atol=1e-15)


def test_exact_jacobian_layer_bounds():
    w = init_network(NetConfig(d=2, m=4, L=2, b=0.0, seed=12))
    with pytest.raises(ValueError):
        exact_jacobian_uv(w, [], 3)


def test_exact_jacobian_finite_differences():
    cfg = NetConfig(d=6, m=32, L=2, b=0.25, seed=13)
    w = init_network(cfg)
    X = unit_columns(6, 2, seed=14)
    caches = [forward(w, X[:, i]) for i in range(2)]
    for layer in (1, 2):
        pairs = exact_jacobian_uv(w, caches, layer)
        u, v = pairs[0]
        x = X[:, 0]
        checked = 0
        rng = np.random.default_rng(15)
        eps = 1e-5
        while checked < 5:
            r = int(rng.integers(0, 32))
            s = int(rng.integers(0, v.size))
            expect = u[r] * v[s]
            if abs(expect) < 1e-6:
                continue
            W = w.layers[layer - 1]
            W[r, s] += eps
            cp = forward(w, x)
            W[r, s] -= 2 * eps
            cm = forward(w, x)
            W[r, s] += eps
            same_masks = all(
                np.array_equal(a.active, b.active)
                for a, b in zip(cp.masks, cm.masks)
            )
            if not same_masks:
                continue
            fd = (cp.f - cm.f) / (2 * eps)
            assert fd == pytest.approx(expect, rel=1e-5)
            checked += 1


def test_exact_gram_properties():
    cfg = NetConfig(d=3, m=6, L=2, b=0.1, seed=16)
    w = init_network(cfg)
    X = unit_columns(3, 4, seed=17)
    caches = [forward(w, X[:, i]) for i in range(4)]
    for layer in (1, 2):
        pairs = exact_jacobian_uv(w, caches, layer)
        G = exact_gram(w, caches, layer)
        for i, (u, v) in enumerate(pairs):
            assert G[i, i] == pytest.approx(
                np.linalg.norm(u) ** 2 * np.linalg.norm(v) ** 2, abs=1e-12
            )
        J = np.array([np.outer(u, v).ravel() for u, v in pairs])
        assert np.allclose(G, J @ J.T, atol=1e-12)
        assert min_eigenvalue(G) >= -1e-10


def test_min_eigenvalue_basics():
    assert min_eigenvalue(np.eye(3)) == pytest.approx(1.0, abs=1e-14)
    assert min_eigenvalue(np.diag([3.0, -2.0, 5.0])) == pytest.approx(-2.0, abs=1e-14)
    with pytest.raises(ValueError):
        min_eigenvalue(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_min_eigenvalue_vs_characteristic_polynomial():
    rng = np.random.default_rng(18)
    A = rng.standard_normal((3, 3))
    G = A @ A.T
    # char poly of a 3x3 symmetric matrix via trace identities
    c2 = -np.trace(G)
    c1 = 0.5 * (np.trace(G) ** 2 - np.trace(G @ G))
    c0 = -np.linalg.det(G)
    roots = np.roots([1.0, c2, c1, c0])
    assert min_eigenvalue(G) == pytest.approx(min(roots.real), abs=1e-8)


def test_hadamard_product_eigenvalue_floor():
    rng = np.random.default_rng(19)
    for _ in range(20):
        k = int(rng.integers(2, 9))
        A = rng.standard_normal((k, k))
        A = A @ A.T
        B = rng.standard_normal((k, k))
        B = B @ B.T
        assert min_eigenvalue(A * B) >= min(np.diag(B)) * min_eigenvalue(A) - 1e-10
