"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Budgets and tolerances are fixed here; statistical checks use frozen seeds.
"""
import math
import time

import numpy as np
import pytest

import subquad as sq
from subquad.bench import run_bench, sparse_shift
from subquad.checks import check_lrm
from subquad.data import gen_data
from subquad.net import NetConfig, Weights, shift_scale
from subquad.sketch import TensorSrhtTransform, TensorSketchTransform, sketch_jacobian, srht_materialize, ts_materialize


def report(num, passed, stat, elapsed, budget):
    flag = "PASS" if passed else "FAIL"
    print(f"{flag} criterion {num}: {stat} [{elapsed:.1f}s / budget {budget}s]", flush=True)
    assert passed, f"criterion {num}: {stat}"
    assert elapsed < budget, f"criterion {num} exceeded budget: {elapsed:.1f}s"


def test_criterion_1_lrm_oracle_equivalence():
    t0 = time.perf_counter()
    results = check_lrm(seed=11)
    by_name = {r.name: r for r in results}
    ok = all(r.passed for r in results)
    stat = "; ".join(r.stat for r in results)
    report(1, ok, f"200 randomized LRM sequences vs dense oracle ({stat})",
           time.perf_counter() - t0, 30)


def test_criterion_2_sketch_definitional_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(21)
    worst = 0.0
    for seed in range(50):
        m = int(rng.integers(2, 17))
        s = int(rng.integers(2, 33))
        x, y = rng.standard_normal(m), rng.standard_normal(m)
        col = np.outer(x, y).ravel()
        T = TensorSketchTransform(m, s, seed=seed)
        worst = max(worst, float(np.abs(T.apply(x, y) - ts_materialize(T) @ col).max()))
        Ts = TensorSrhtTransform(m, s, seed=seed)
        worst = max(worst, float(np.abs(Ts.apply(x, y) - srht_materialize(Ts) @ col).max()))
    report(2, worst <= 1e-12, f"50 seeds, max |fast - definitional| = {worst:.2e} <= 1e-12",
           time.perf_counter() - t0, 10)


def test_criterion_3_subspace_embedding_statistic():
    t0 = time.perf_counter()
    n, m, s1 = 8, 64, 1024
    rng = np.random.default_rng(31)
    us = [rng.standard_normal(m) for _ in range(n)]
    vs = [rng.standard_normal(m) for _ in range(n)]
    G = sq.gram_exact(us, vs)
    Ghalf_inv = np.linalg.inv(np.linalg.cholesky(G))
    good = 0
    for seed in range(100):
        T = TensorSrhtTransform(m, s1, seed=1000 + seed)
        Jt = sketch_jacobian(us, vs, T)
        w = np.linalg.eigvalsh(Ghalf_inv @ (Jt @ Jt.T) @ Ghalf_inv.T)
        dist = max(abs(math.sqrt(w[-1]) - 1.0), abs(math.sqrt(max(w[0], 0.0)) - 1.0))
        good += dist <= 0.25
    report(3, good >= 95, f"TensorSRHT s1=1024: distortion <= 0.25 in {good}/100 transforms",
           time.perf_counter() - t0, 60)


def test_criterion_4_gram_regression_accuracy():
    t0 = time.perf_counter()
    ok = True
    worst = 0.0
    for n in (4, 8, 16):
        for m in (32, 64):
            for seed in range(3):
                rng = np.random.default_rng(41 * n + m + seed)
                us = [rng.standard_normal(m) for _ in range(n)]
                vs = [rng.standard_normal(m) for _ in range(n)]
                c = rng.standard_normal(n)
                rep = sq.fast_tensor_regression(us, vs, c, eps=1e-6, seed=seed)
                G = sq.gram_exact(us, vs)
                rel = np.linalg.norm(G @ rep.solution - c) / np.linalg.norm(c)
                worst = max(worst, rel)
                ok = ok and rel <= 1e-6
    rng = np.random.default_rng(77)
    us = [rng.standard_normal(64) for _ in range(8)]
    vs = [rng.standard_normal(64) for _ in range(8)]
    c = rng.standard_normal(8)
    iters = [
        sq.fast_tensor_regression(us, vs, c, eps=eps, seed=1).iterations
        for eps in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
    ]
    growth = np.diff(iters)
    linear = bool(np.all(growth >= 0) and np.all(growth <= 12))
    report(4, ok and linear,
           f"true-Gram residual <= 1e-6 (worst {worst:.2e}); iterations {iters} grow linearly in log(1/eps)",
           time.perf_counter() - t0, 60)


def test_criterion_5_activation_sparsity():
    t0 = time.perf_counter()
    m, d = 4096, 8
    b = sparse_shift(m)  # sqrt(2 * 0.4 * ln m)
    p = sq.expected_active(m, b)[0] / m
    sd = math.sqrt(m * p * (1 - p))
    x = np.zeros(d)
    x[0] = 1.0
    good = 0
    for seed in range(100):
        w = sq.init_network(NetConfig(d=d, m=m, L=1, b=b, seed=seed))
        h, _ = sq.activate(w.layers[0] @ x, b)
        good += abs(h.nnz - m * p) <= 4 * sd
    report(5, good >= 95,
           f"||h1||_0 within 4 binomial sd of {m * p:.1f} in {good}/100 inits",
           time.perf_counter() - t0, 60)


def test_criterion_6_norm_preservation():
    t0 = time.perf_counter()
    m, d, L = 4096, 8, 3
    x = np.zeros(d)
    x[0] = 1.0
    counts = {}
    for seed in range(100):
        base = sq.init_network(NetConfig(d=d, m=m, L=L, b=0.0, seed=seed))
        for b in (0.0, 1.0):
            w = base if b == 0.0 else Weights(
                layers=base.layers,
                a=base.a,
                scale=shift_scale(b),
                config=NetConfig(d=d, m=m, L=L, b=b, seed=seed),
            )
            cache = sq.forward(w, x)
            norms = [np.linalg.norm(h.values) for h in cache.h]
            counts[b] = counts.get(b, 0) + all(0.85 <= v <= 1.15 for v in norms)
    ok = counts[0.0] >= 95 and counts[1.0] >= 95
    report(6, ok,
           f"||h_l|| in [0.85,1.15] for all 3 layers: b=0 {counts[0.0]}/100, b=1 {counts[1.0]}/100",
           time.perf_counter() - t0, 120)


def _finite_width_kernels(X, m, L, seed):
    n = X.shape[1]
    w = sq.init_network(NetConfig(d=X.shape[0], m=m, L=L, b=0.0, seed=seed))
    caches = [sq.forward(w, X[:, i]) for i in range(n)]
    out = [X.T @ X]
    for lvl in range(1, L):
        hs = np.array([c.layer_h(lvl).to_dense() for c in caches])
        out.append(hs @ hs.T)
    HL = np.zeros((n, n))
    act = [c.layer_mask(L).active for c in caches]
    for i in range(n):
        for j in range(n):
            HL[i, j] = w.scale * np.intersect1d(act[i], act[j], assume_unique=True).size / m
    out.append(HL)
    return out


def test_criterion_7_ntk_consistency():
    t0 = time.perf_counter()
    n, d, L = 6, 8, 2
    X, _ = gen_data(n, d, seed=77, min_separation=0.5)
    stack = sq.ntk_kernels(X, L)
    medians = []
    for m in (256, 1024, 4096):
        errs = []
        for seed in range(20):
            Hs = _finite_width_kernels(X, m, L, seed)
            errs.append(max(float(np.abs(H - K).max()) for H, K in zip(Hs, stack.kernels)))
        medians.append(float(np.median(errs)))
    decreasing = medians[0] > medians[1] > medians[2]
    decay = medians[2] <= 0.7 * medians[0]
    report(7, decreasing and decay,
           f"median max-entry |H-K| over m=(256,1024,4096): "
           f"({medians[0]:.4f}, {medians[1]:.4f}, {medians[2]:.4f}); "
           f"ratio {medians[2] / medians[0]:.2f} <= 0.7",
           time.perf_counter() - t0, 300)


def test_criterion_8_eigenvalue_floor():
    t0 = time.perf_counter()
    n, d, L, m = 6, 8, 2, 4096
    X, _ = gen_data(n, d, seed=77, min_separation=0.5)
    lam_ntk = sq.ntk_kernels(X, L).lambda_L
    good = 0
    for seed in range(20):
        w = sq.init_network(NetConfig(d=d, m=m, L=L, b=0.0, seed=seed))
        caches = [sq.forward(w, X[:, i]) for i in range(n)]
        lam_g = sq.min_eigenvalue(sq.exact_gram(w, caches, L)) / m
        good += lam_g >= 0.5 * lam_ntk
    report(8, good >= 18,
           f"lambda_min(G_L/m) >= lambda_L/2 = {0.5 * lam_ntk:.4f} in {good}/20 seeds",
           time.perf_counter() - t0, 180)


def test_criterion_9_training_convergence():
    t0 = time.perf_counter()
    n, d, L, m = 8, 8, 2, 2048
    passed = 0
    stats = []
    for seed in range(10):
        X, y = gen_data(n, d, seed=100 + seed, min_separation=0.5)
        cfg = sq.TrainConfig(
            net=NetConfig(d=d, m=m, L=L, b=0.3, seed=seed),
            n=n,
            T=25,
            target_residual=1e-3,
            seed=seed,
        )
        metrics = sq.train(cfg, X, y)
        res = [mt.residual for mt in metrics]
        ratios = [res[i + 1] / res[i] for i in range(min(10, len(res) - 1)) if res[i] > 0]
        med = float(np.median(ratios)) if ratios else 0.0
        ok = med <= 0.5 and res[-1] <= 1e-3 and len(res) - 1 <= 25
        passed += ok
        stats.append(med)
    report(9, passed >= 8,
           f"median step ratio <= 0.5 and residual <= 1e-3 within 25 steps in {passed}/10 seeds "
           f"(ratios median {np.median(stats):.2f})",
           time.perf_counter() - t0, 600)


def test_criterion_10_subquadratic_iteration_scaling():
    t0 = time.perf_counter()
    _, slopes = run_bench([512, 1024, 2048, 4096], n=8, d=8, L=2, reps=5,
                          modes=("fast", "dense"), seed=0)
    by = {(s.mode, s.phase): s.slope for s in slopes}
    fast = by[("fast", "iteration")]
    dense = by[("dense", "iteration")]
    ok = fast <= 1.8 and 1.8 <= dense <= 2.2
    report(10, ok,
           f"log-log slope fast iteration {fast:.2f} <= 1.8; dense {dense:.2f} in [1.8, 2.2]",
           time.perf_counter() - t0, 900)


def test_criterion_11_gradient_check():
    t0 = time.perf_counter()
    d, m = 8, 64
    w = sq.init_network(NetConfig(d=d, m=m, L=2, b=0.2, seed=5))
    X, _ = gen_data(4, d, seed=6, min_separation=0.5)
    eps = 1e-5
    tau = w.threshold
    checked = 0
    worst = 0.0
    rng = np.random.default_rng(7)
    while checked < 100:
        i = int(rng.integers(0, 4))
        x = X[:, i]
        cache = sq.forward(w, x)
        u, v = sq.compute_uv_last(w, cache)
        ud, vd = u.to_dense(), v.to_dense()
        r = int(rng.integers(0, m))
        s = int(rng.integers(0, m))
        # safe entry: pre-activation at least 1e-3 from the threshold
        if abs(cache.layer_g(2)[r] - tau) < 1e-3 or abs(ud[r] * vd[s]) < 1e-8:
            continue
        W = w.layers[1]
        W[r, s] += eps
        fp = sq.forward(w, x).f
        W[r, s] -= 2 * eps
        fm = sq.forward(w, x).f
        W[r, s] += eps
        fd = (fp - fm) / (2 * eps)
        worst = max(worst, abs(fd - ud[r] * vd[s]) / abs(ud[r] * vd[s]))
        checked += 1
    report(11, worst <= 1e-5,
           f"100 safe entries: max relative gradient error {worst:.2e} <= 1e-5",
           time.perf_counter() - t0, 10)
