"""Named statistical check suites, driven by the CLI ``check`` command."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lowrank import LowRankWeights
from .ntk import f_theta, min_eigenvalue, ntk_kernels, ntk_kernels_mc, relu_prime_corr
from .sketch import (
    TensorSketchTransform,
    TensorSrhtTransform,
    sketch_jacobian,
    srht_materialize,
    ts_materialize,
)
from .solver import fast_tensor_regression, gram_exact

SUITES = ("lrm", "sketch", "ntk", "solver")


@dataclass
class CheckResult:
    name: str
    passed: bool
    stat: str

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: {self.stat}"


def check_lrm(seed: int = 0) -> list[CheckResult]:
    """200 randomized update/query/flush sequences against a dense oracle."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    flush_boundaries = 0
    rank_ok = True
    for _ in range(200):
        m = int(rng.integers(8, 257))
        threshold = int(rng.integers(1, 4 * m // 3 + 2))
        base = rng.standard_normal((m, m))
        lrm = LowRankWeights([base], threshold)
        acc = base.copy()
        for _ in range(int(rng.integers(2, 12))):
            op = rng.random()
            if op < 0.6:
                r = int(rng.integers(1, 9))
                U = rng.standard_normal((m, r))
                V = rng.standard_normal((m, r))
                lrm.update(1, U, V)
                acc += U @ V.T
            elif op < 0.75:
                lrm.flush(1)
            else:
                y = rng.standard_normal(m)
                scale = max(np.abs(acc @ y).max(), 1e-30)
                worst = max(worst, np.abs(lrm.query(1, y) - acc @ y).max() / scale)
                worst = max(
                    worst, np.abs(lrm.query_transpose(1, y) - acc.T @ y).max() / scale
                )
            rank_ok = rank_ok and lrm.rank(1) < lrm.threshold
        flush_boundaries += lrm.flush_count
        scale = max(np.abs(acc).max(), 1e-30)
        worst = max(worst, np.abs(lrm.to_dense(1) - acc).max() / scale)
    return [
        CheckResult("lrm_oracle_relative_error", worst <= 1e-10, f"max={worst:.2e}"),
        CheckResult(
            "lrm_flush_boundaries", flush_boundaries >= 3, f"count={flush_boundaries}"
        ),
        CheckResult("lrm_rank_below_threshold", rank_ok, "invariant held"),
    ]


def check_sketch(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []

    worst = 0.0
    for trial in range(20):
        m = int(rng.integers(2, 17))
        s = int(rng.integers(2, 33))
        x = rng.standard_normal(m)
        y = rng.standard_normal(m)
        col = np.outer(x, y).ravel()
        T = TensorSketchTransform(m, s, seed=seed * 1000 + trial)
        worst = max(worst, np.abs(T.apply(x, y) - ts_materialize(T) @ col).max())
        Ts = TensorSrhtTransform(m, s, seed=seed * 1000 + trial)
        worst = max(worst, np.abs(Ts.apply(x, y) - srht_materialize(Ts) @ col).max())
    results.append(
        CheckResult("sketch_definitional_equivalence", worst <= 1e-12, f"max={worst:.2e}")
    )

    m = 32
    x = rng.standard_normal(m)
    y = rng.standard_normal(m)
    target = np.linalg.norm(x) ** 2 * np.linalg.norm(y) ** 2
    for cls, label in (
        (TensorSketchTransform, "tensorsketch"),
        (TensorSrhtTransform, "tensorsrht"),
    ):
        norms = []
        for t in range(1000):
            T = cls(m, 64, seed=seed * 7000 + t)
            norms.append(np.linalg.norm(T.apply(x, y)) ** 2)
        rel = abs(np.mean(norms) - target) / target
        results.append(
            CheckResult(f"{label}_unbiasedness", rel <= 0.05, f"rel_err={rel:.3f}")
        )

    n, m, s1 = 8, 64, 1024
    us = [rng.standard_normal(m) for _ in range(n)]
    vs = [rng.standard_normal(m) for _ in range(n)]
    G = gram_exact(us, vs)
    Ghalf_inv = np.linalg.inv(np.linalg.cholesky(G))
    good = 0
    for t in range(100):
        T = TensorSrhtTransform(m, s1, seed=seed * 9000 + t)
        Jt = sketch_jacobian(us, vs, T)
        M = Ghalf_inv @ (Jt @ Jt.T) @ Ghalf_inv.T
        w = np.linalg.eigvalsh(M)
        dist = max(abs(math.sqrt(w[-1]) - 1.0), abs(math.sqrt(max(w[0], 0.0)) - 1.0))
        good += dist <= 0.25
    results.append(
        CheckResult("tensorsrht_subspace_distortion", good >= 95, f"good={good}/100")
    )
    return results


def check_ntk(seed: int = 0, b: float = 0.0, lambda_mode: str = "gram_init") -> list[CheckResult]:
    if b > 0.0 and lambda_mode == "ntk_closed_form":
        raise ValueError("closed-form kernels require b = 0")
    rng = np.random.default_rng(seed)
    results = []
    spot = (
        abs(f_theta(0.0) - 0.5)
        + abs(f_theta(math.pi))
        + abs(f_theta(math.pi / 2) - 1.0 / (2.0 * math.pi))
        + abs(relu_prime_corr(0.0) - 0.25)
        + abs(relu_prime_corr(1.0) - 0.5)
    )
    results.append(CheckResult("ntk_spot_values", spot <= 1e-12, f"dev={spot:.2e}"))

    X = rng.standard_normal((6, 4))
    X /= np.linalg.norm(X, axis=0)
    stack = ntk_kernels(X, 2)
    mc = ntk_kernels_mc(X, 2, b=0.0, samples=100000, seed=seed)
    ok = True
    worst = 0.0
    for lvl in range(1, 3):
        dev = np.abs(stack.kernels[lvl] - mc.kernels[lvl])
        bound = 4.0 * mc.stderr[lvl] + 1e-6
        ok = ok and bool(np.all(dev <= bound))
        worst = max(worst, float((dev / bound).max()))
    results.append(
        CheckResult("ntk_closed_form_vs_mc", ok, f"max dev/4se={worst:.2f}")
    )

    if b > 0.0:
        mcb = ntk_kernels_mc(X, 2, b=b, samples=100000, seed=seed + 1)
        diag_dev = max(
            float(np.abs(np.diag(mcb.kernels[lvl]) - 1.0).max()) for lvl in (1,)
        )
        results.append(
            CheckResult(
                "ntk_mc_diag_normalization", diag_dev <= 0.02, f"dev={diag_dev:.4f}"
            )
        )

    ok = True
    for _ in range(20):
        k = int(rng.integers(2, 9))
        A = rng.standard_normal((k, k))
        A = A @ A.T
        B = rng.standard_normal((k, k))
        B = B @ B.T
        lhs = min_eigenvalue(A * B)
        rhs = min(np.diag(B)) * min_eigenvalue(A)
        ok = ok and lhs >= rhs - 1e-10
    results.append(CheckResult("hadamard_eigenvalue_floor", ok, "held on 20 draws"))
    return results


def check_solver(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    n, m = 8, 64
    conds = []
    accurate = True
    monotone = True
    for t in range(100):
        r = np.random.default_rng(seed * 31 + t)
        us = [r.standard_normal(m) for _ in range(n)]
        vs = [r.standard_normal(m) for _ in range(n)]
        c = r.standard_normal(n)
        rep = fast_tensor_regression(us, vs, c, eps=1e-6, seed=t)
        conds.append(rep.preconditioner_cond_estimate)
        G = gram_exact(us, vs)
        accurate = accurate and np.linalg.norm(G @ rep.solution - c) <= 1e-6 * np.linalg.norm(c)
        hist = rep.residual_history
        monotone = monotone and all(
            hist[i + 1] <= hist[i] + 1e-12 for i in range(len(hist) - 1)
        )
    good = sum(c <= 2.0 for c in conds)
    results.append(
        CheckResult("solver_preconditioner_cond", good >= 95, f"cond<=2 in {good}/100")
    )
    results.append(CheckResult("solver_gram_accuracy", accurate, "eps=1e-6 held"))
    results.append(CheckResult("solver_residual_monotone", monotone, "1e-12 slack"))

    us = [rng.standard_normal(m) for _ in range(n)]
    vs = [rng.standard_normal(m) for _ in range(n)]
    c = rng.standard_normal(n)
    its = []
    for eps in (1e-2, 1e-4, 1e-6, 1e-8):
        rep = fast_tensor_regression(us, vs, c, eps=eps, seed=1)
        its.append(rep.iterations)
    growth = np.diff(its)
    ok = bool(np.all(growth <= max(3 * growth[0], 30)))
    results.append(
        CheckResult("solver_iterations_log_eps", ok, f"iters={its}")
    )
    return results


def run_suite(suite: str, seed: int = 0, **kwargs) -> list[CheckResult]:
    if suite == "lrm":
        return check_lrm(seed)
    if suite == "sketch":
        return check_sketch(seed)
    if suite == "ntk":
        return check_ntk(seed, **kwargs)
    if suite == "solver":
        return check_solver(seed)
    raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
