"""Subquadratic-per-iteration training of wide shifted-ReLU networks.

Building blocks: a sparse shifted-ReLU network core, lazy low-rank weight
maintenance, degree-2 tensor sketches with SRHT subspace embeddings,
sketch-preconditioned Gram regression, and closed-form kernel oracles for
verification.
"""
from .backend import active_backend, available_backends, use_backend
from .errors import (
    NoConvergenceError,
    NonPositiveLambdaError,
    RankDeficientError,
    SingularGramError,
    SubquadError,
)
from .lowrank import LowRankWeights
from .net import (
    ActivationMask,
    ForwardCache,
    NetConfig,
    Weights,
    activate,
    expected_active,
    forward,
    forward_dense,
    init_network,
    predict_and_loss,
    shift_scale,
    truncated_gaussian_stats,
)
from .ntk import (
    KernelStack,
    exact_gram,
    exact_jacobian_uv,
    f_theta,
    min_eigenvalue,
    ntk_kernels,
    ntk_kernels_mc,
    relu_prime_corr,
)
from .sketch import (
    CountSketchParams,
    SubspaceEmbedTransform,
    TensorSketchTransform,
    TensorSrhtTransform,
    embed_apply,
    fwht,
    sketch_jacobian,
    srht_apply,
    ts_apply,
    ts_materialize,
)
from .solver import (
    RegressionReport,
    fast_regression,
    fast_tensor_regression,
    gram_exact,
    gram_solve_direct,
)
from .sparse import SparseVector
from .training import (
    IterationMetrics,
    TrainConfig,
    TrainState,
    choose_epsilon0,
    compute_uv_general,
    compute_uv_last,
    estimate_lambda,
    train,
)

__version__ = "0.1.0"
