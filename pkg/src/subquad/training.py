"""Last-layer Gauss-Newton training with lazy low-rank weight maintenance.

Each iteration: take the residual of the current predictions, extract the
rank-1 Jacobian factors u_i = D_{i,L} a and v_i = h_{i,L-1} (the lower layers
are frozen, so h_{i,L-1} is computed once at init), solve the Gram regression
G g = f_t - y to precision eps_0, push the low-rank update
W_L <- W_L - sum_i g_i u_i v_i^T into the maintenance structure, and refresh
the predictions through it.  Metric row t describes the state after t updates.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergenceError, NonPositiveLambdaError
from .lowrank import LowRankWeights
from .net import NetConfig, Weights, ForwardCache, activate, forward, init_network
from .ntk import exact_gram, min_eigenvalue, ntk_kernels
from .solver import fast_tensor_regression
from .sparse import SparseVector


@dataclass
class TrainConfig:
    net: NetConfig
    n: int
    T: int
    target_residual: float = 0.0
    eps0: float | None = None  # None: min(1/9, sqrt(lambda/n))
    sketch_variant: str = "tensorsrht"
    s1: int | None = None
    s2: int | None = None
    lrm_threshold: int | None = None
    lambda_mode: str = "gram_init"  # gram_init | ntk_closed_form | manual
    lambda_value: float | None = None
    solver_delta: float = 0.01
    continue_on_noconvergence: bool = False
    drop_dead_samples: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.T < 0:
            raise ValueError("need n >= 1 and T >= 0")
        if self.target_residual < 0:
            raise ValueError("target_residual must be >= 0")
        if self.eps0 is not None and not (0.0 < self.eps0 < 0.5):
            raise ValueError("fixed eps0 must lie in (0, 1/2)")
        if self.lambda_mode not in ("gram_init", "ntk_closed_form", "manual"):
            raise ValueError(f"unknown lambda_mode {self.lambda_mode!r}")
        if self.lambda_mode == "manual" and self.lambda_value is None:
            raise ValueError("manual lambda mode needs lambda_value")


@dataclass
class IterationMetrics:
    t: int
    residual: float
    loss: float
    h_nnz_max: int
    h_nnz_mean: float
    dmask_nnz_max: int
    dmask_nnz_mean: float
    rank: int
    reg_iterations: int
    flush_count: int
    weight_movement: float
    solver_ok: bool = True
    time_forward: float = 0.0
    time_sketch: float = 0.0
    time_solve: float = 0.0
    time_update: float = 0.0
    time_flush: float = 0.0


def compute_uv_last(weights: Weights, cache: ForwardCache):
    """Rank-1 factors of the last-layer Jacobian row: u = D_L a, v = h_{L-1}."""
    L = weights.config.L
    mask = cache.layer_mask(L)
    u = SparseVector(mask.active, mask.scale * weights.a[mask.active], weights.config.m)
    return u, cache.input_to(L)


def compute_uv_general(
    weights: Weights, lrm: LowRankWeights, cache: ForwardCache, layer: int
):
    """u built right-to-left through transposed low-rank queries; v = h_{layer-1}.

    The cache must describe a forward pass through the logical (maintained)
    weights.  Cost O(m L (nnz + rank)) thanks to the sparse diagonal masks.
    """
    L = weights.config.L
    if not 1 <= layer <= L:
        raise ValueError("layer out of range")
    w = cache.layer_mask(L).apply(weights.a)
    for k in range(L, layer, -1):
        dense = lrm.query_transpose(k, w)
        w = cache.layer_mask(k - 1).apply(dense)
    return w, cache.input_to(layer)


def choose_epsilon0(lambda_hat: float, n: int) -> float:
    """Regression precision min(1/9, sqrt(lambda/n))."""
    if not lambda_hat > 0:
        raise NonPositiveLambdaError("lambda estimate must be positive")
    return min(1.0 / 9.0, math.sqrt(lambda_hat / n))


def estimate_lambda(
    X: np.ndarray,
    cfg: TrainConfig,
    weights: Weights | None = None,
    caches: list[ForwardCache] | None = None,
) -> float:
    """Estimate of the last-layer kernel floor eigenvalue, per configured mode.

    gram_init rescales the finite-width Gram by the width m (its entries are
    m times the kernel's) and applies the 4/3 slack of the eigenvalue bound.
    """
    mode = cfg.lambda_mode
    if mode == "manual":
        if not cfg.lambda_value > 0:
            raise NonPositiveLambdaError("manual lambda must be positive")
        return float(cfg.lambda_value)
    if mode == "ntk_closed_form":
        if cfg.net.b != 0.0:
            raise ValueError("closed-form kernels require b = 0")
        lam = ntk_kernels(X, cfg.net.L).lambda_L
        if lam <= 1e-12:
            raise NonPositiveLambdaError("NTK matrix is numerically singular")
        return float(lam)
    if weights is None:
        weights = init_network(cfg.net)
    if caches is None:
        caches = [forward(weights, X[:, i]) for i in range(X.shape[1])]
    lam = (4.0 / 3.0) * min_eigenvalue(
        exact_gram(weights, caches, cfg.net.L)
    ) / cfg.net.m
    return max(float(lam), float(np.finfo(np.float64).eps))


class TrainState:
    """One training run: frozen inputs plus the maintained layer-L weights."""

    def __init__(self, cfg: TrainConfig, X: np.ndarray, y: np.ndarray):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.shape != (cfg.net.d, cfg.n) or y.shape != (cfg.n,):
            raise ValueError("X must be d x n with a length-n label vector")
        self.cfg = cfg
        self.X = X
        self.y = y
        self.weights = init_network(cfg.net)
        caches = [forward(self.weights, X[:, i]) for i in range(cfg.n)]
        L = cfg.net.L
        self.h_prev = [c.input_to(L) for c in caches]
        self.init_active = [c.layer_mask(L).active.copy() for c in caches]
        self.masks = [c.layer_mask(L) for c in caches]
        self.h_last = [c.layer_h(L) for c in caches]
        self.f = np.array([c.f for c in caches])
        self.lam = estimate_lambda(X, cfg, self.weights, caches)
        self.eps0 = cfg.eps0 if cfg.eps0 is not None else choose_epsilon0(self.lam, cfg.n)
        threshold = cfg.lrm_threshold
        if threshold is None:
            threshold = max(cfg.n, math.ceil(cfg.net.m**0.31))
        self.lrm = LowRankWeights.from_weights(self.weights, threshold)
        self.movement = 0.0
        self.t = 0
        self._seed_seq = np.random.SeedSequence(cfg.seed)
        self.metrics: list[IterationMetrics] = [self._record(0, True, 0, 0, 0, 0)]

    def _record(self, reg_iters, solver_ok, tf, ts, tsol, tup):
        r = self.f - self.y
        dmask = [
            np.setxor1d(self.init_active[i], self.masks[i].active).size
            for i in range(self.cfg.n)
        ]
        return IterationMetrics(
            t=self.t,
            residual=float(np.linalg.norm(r)),
            loss=0.5 * float(r @ r),
            h_nnz_max=max(h.nnz for h in self.h_last),
            h_nnz_mean=float(np.mean([h.nnz for h in self.h_last])),
            dmask_nnz_max=int(max(dmask)),
            dmask_nnz_mean=float(np.mean(dmask)),
            rank=self.lrm.rank(self.cfg.net.L),
            reg_iterations=reg_iters,
            flush_count=self.lrm.flush_count,
            weight_movement=self.movement,
            solver_ok=solver_ok,
            time_forward=tf,
            time_sketch=ts,
            time_solve=tsol,
            time_update=tup,
        )

    def _step_seed(self) -> int:
        return int(self._seed_seq.spawn(1)[0].generate_state(1)[0])

    def step(self) -> IterationMetrics:
        """One Gauss-Newton iteration on layer L."""
        cfg = self.cfg
        L = cfg.net.L
        m = cfg.net.m
        n = cfg.n
        a = self.weights.a
        r = self.f - self.y

        t0 = time.perf_counter()
        us = [
            SparseVector(mask.active, mask.scale * a[mask.active], m)
            for mask in self.masks
        ]
        vs = self.h_prev
        solver_ok = True
        try:
            report = fast_tensor_regression(
                us,
                vs,
                r,
                self.eps0,
                delta=cfg.solver_delta,
                variant=cfg.sketch_variant,
                s1=cfg.s1,
                s2=cfg.s2,
                seed=self._step_seed(),
                drop_zero_rows=cfg.drop_dead_samples,
            )
        except NoConvergenceError as exc:
            if not cfg.continue_on_noconvergence:
                raise
            report = exc.report
            solver_ok = False
        g_coef = report.solution
        t_solve_all = time.perf_counter() - t0
        t_sketch = report.sketch_seconds
        t_solve = max(t_solve_all - t_sketch, 0.0)

        t0 = time.perf_counter()
        flush_before = self.lrm.flush_seconds
        U = np.zeros((m, n))
        for i, u in enumerate(us):
            U[u.indices, i] = -g_coef[i] * u.values
        fan_in = cfg.net.d if L == 1 else m
        V = np.zeros((fan_in, n))
        for i, v in enumerate(vs):
            if isinstance(v, SparseVector):
                V[v.indices, i] = v.values
            else:
                V[:, i] = v
        VtV = V.T @ V
        row_sq = np.einsum("ij,jk,ik->i", U, VtV, U)
        self.movement += math.sqrt(max(float(np.max(row_sq)), 0.0))
        self.lrm.update(L, U, V)
        t_flush = self.lrm.flush_seconds - flush_before
        t_update = max(time.perf_counter() - t0 - t_flush, 0.0)

        t0 = time.perf_counter()
        for i in range(n):
            g = self.lrm.query(L, self.h_prev[i])
            h, mask = activate(g, cfg.net.b)
            self.h_last[i] = h
            self.masks[i] = mask
            self.f[i] = a[h.indices] @ h.values
        t_forward = time.perf_counter() - t0

        self.t += 1
        metric = self._record(
            report.iterations, solver_ok, t_forward, t_sketch, t_solve, t_update
        )
        metric.time_flush = t_flush
        self.metrics.append(metric)
        return metric


def train(cfg: TrainConfig, X: np.ndarray, y: np.ndarray) -> list[IterationMetrics]:
    """Run up to T steps, stopping early once the residual reaches the target."""
    state = TrainState(cfg, X, y)
    for _ in range(cfg.T):
        if state.metrics[-1].residual <= cfg.target_residual:
            break
        state.step()
    return state.metrics
