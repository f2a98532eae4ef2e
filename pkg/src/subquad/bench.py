"""Benchmark sweeps: fast path vs dense oracle over a width sweep.

Phases are timed with a monotonic clock, one warm-up iteration is excluded,
and the median over repetitions is reported.  With at least three widths a
log-log slope is fitted per (backend, mode, phase).  BLAS pools are pinned
to one thread during timing (override with SUBQUAD_THREADS) so the fitted
exponents reflect arithmetic, not thread scheduling.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg.blas
from threadpoolctl import threadpool_limits

from . import backend
from .data import gen_data
from .net import NetConfig, activate, init_network
from .solver import gram_solve_direct
from .training import TrainConfig, TrainState

FAST_PHASES = ("forward", "sketch", "solve", "update", "iteration")
DENSE_PHASES = ("forward", "solve", "update", "iteration")


@dataclass
class BenchRow:
    backend: str
    mode: str
    phase: str
    m: int
    median_seconds: float


@dataclass
class SlopeRow:
    backend: str
    mode: str
    phase: str
    slope: float


def sparse_shift(m: int, alpha: float = 0.4) -> float:
    """Shift b = sqrt(2 alpha ln m), giving ~m^(1-alpha) active neurons."""
    return math.sqrt(2.0 * alpha * math.log(m))


def _median_phases(samples: list[dict], phases) -> dict:
    return {
        p: float(np.median([s[p] for s in samples])) for p in phases
    }


def _bench_fast(n, d, L, m, reps, base_seed, b=None) -> dict:
    bshift = sparse_shift(m) if b is None else b
    X, y = gen_data(n, d, seed=base_seed, min_separation=0.5)
    cfg = TrainConfig(
        net=NetConfig(d=d, m=m, L=L, b=bshift, seed=base_seed),
        n=n,
        T=reps + 1,
        lambda_mode="manual",
        lambda_value=1.0,
        drop_dead_samples=True,  # very sparse regime can zero a Jacobian row
        seed=base_seed,
    )
    state = TrainState(cfg, X, y)
    state.step()  # warm-up, excluded
    samples = []
    for _ in range(reps):
        mt = state.step()
        samples.append(
            {
                "forward": mt.time_forward,
                "sketch": mt.time_sketch,
                "solve": mt.time_solve,
                "update": mt.time_update,
                "iteration": mt.time_forward
                + mt.time_sketch
                + mt.time_solve
                + mt.time_update,
            }
        )
    return _median_phases(samples, FAST_PHASES)


def _bench_dense(n, d, L, m, reps, base_seed, b=None) -> dict:
    bshift = sparse_shift(m) if b is None else b
    X, y = gen_data(n, d, seed=base_seed, min_separation=0.5)
    weights = init_network(NetConfig(d=d, m=m, L=L, b=bshift, seed=base_seed))
    W = np.asfortranarray(weights.layers[-1])  # dgemm updates in place
    a = weights.a
    # frozen lower-layer outputs, exactly like the fast path
    h_prev = np.empty((m if L > 1 else d, n))
    for i in range(n):
        vec = X[:, i]
        for ell in range(L - 1):
            g = weights.layers[ell] @ vec
            h, _ = activate(g, bshift)
            vec = h.to_dense()
        h_prev[:, i] = vec

    root = math.sqrt(weights.scale)
    tau = math.sqrt(2.0 / m) * bshift

    def one_iter():
        t0 = time.perf_counter()
        G_pre = W @ h_prev  # m x n dense matvecs, O(n m^2)
        act = G_pre > tau
        us = np.where(act, (root * a)[:, None], 0.0)
        f = np.einsum("ri,ri->i", us, G_pre)
        t_forward = time.perf_counter() - t0

        t0 = time.perf_counter()
        r = f - y
        G = (us.T @ us) * (h_prev.T @ h_prev)
        live = np.flatnonzero(np.abs(np.diag(G)) > 0.0)
        g = np.zeros(n)
        if live.size:
            g[live] = gram_solve_direct(G[np.ix_(live, live)], r[live])
        t_solve = time.perf_counter() - t0

        t0 = time.perf_counter()
        # dense m x m update in one pass: W <- W - (us g) h_prev^T
        res = scipy.linalg.blas.dgemm(
            1.0, us * -g, h_prev.T, beta=1.0, c=W, overwrite_c=1
        )
        assert res is W
        t_update = time.perf_counter() - t0
        return {
            "forward": t_forward,
            "solve": t_solve,
            "update": t_update,
            "iteration": t_forward + t_solve + t_update,
        }

    one_iter()  # warm-up
    samples = [one_iter() for _ in range(reps)]
    return _median_phases(samples, DENSE_PHASES)


def run_bench(
    m_list: list[int],
    n: int = 8,
    d: int = 8,
    L: int = 2,
    reps: int = 5,
    modes: tuple[str, ...] = ("fast", "dense"),
    backends: tuple[str, ...] | None = None,
    seed: int = 0,
    b: float | None = None,
) -> tuple[list[BenchRow], list[SlopeRow]]:
    if reps < 3:
        raise ValueError("need at least 3 repetitions")
    if backends is None:
        backends = (backend.active_backend(),)
    workers = int(os.environ.get("SUBQUAD_THREADS", "0") or 0)
    rows: list[BenchRow] = []
    slopes: list[SlopeRow] = []
    previous = backend.active_backend()
    try:
        with threadpool_limits(limits=workers if workers > 0 else 1):
            for bk in backends:
                backend.use_backend(bk)
                for mode in modes:
                    per_phase: dict[str, list[tuple[int, float]]] = {}
                    for m in m_list:
                        fn = _bench_fast if mode == "fast" else _bench_dense
                        med = fn(n, d, L, m, reps, seed, b=b)
                        for phase, sec in med.items():
                            rows.append(BenchRow(bk, mode, phase, m, sec))
                            per_phase.setdefault(phase, []).append((m, sec))
                    if len(m_list) >= 3:
                        for phase, pts in per_phase.items():
                            ms = np.log([p[0] for p in pts])
                            ts = np.log([max(p[1], 1e-9) for p in pts])
                            slope = float(np.polyfit(ms, ts, 1)[0])
                            slopes.append(SlopeRow(bk, mode, phase, slope))
    finally:
        backend.use_backend(previous)
    return rows, slopes


def bench_csv(rows: list[BenchRow], slopes: list[SlopeRow]) -> str:
    lines = ["backend,mode,phase,m,median_seconds,slope"]
    for r in rows:
        lines.append(f"{r.backend},{r.mode},{r.phase},{r.m},{r.median_seconds:.9f},")
    for s in slopes:
        lines.append(f"{s.backend},{s.mode},{s.phase},,,{s.slope:.4f}")
    return "\n".join(lines) + "\n"
