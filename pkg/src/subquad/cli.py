"""Command-line harness: data generation, training runs, benchmarks, checks.

Exit codes: 0 success, 1 usage/config error, 2 numerical non-convergence,
3 I/O error.  ``SUBQUAD_THREADS`` caps BLAS worker threads (0 = automatic);
it must be applied before numpy loads, hence the lazy imports below.
"""
from __future__ import annotations

import argparse
import os
import sys

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_IO = 3

TRAIN_KEYS = {
    "m": int,
    "L": int,
    "b": float,
    "T": int,
    "target_residual": float,
    "eps0": float,
    "sketch": str,
    "s1": int,
    "s2": int,
    "lrm_threshold": int,
    "lambda_mode": str,
    "lambda_value": float,
    "solver_delta": float,
    "continue_on_noconvergence": int,
    "seed": int,
    "net_seed": int,
}

BENCH_KEYS = {
    "n": int,
    "d": int,
    "L": int,
    "b": float,
    "seed": int,
}

TRAIN_COLUMNS = [
    "t",
    "residual",
    "loss",
    "h_nnz_max",
    "h_nnz_mean",
    "dmask_nnz_max",
    "dmask_nnz_mean",
    "rank",
    "reg_iterations",
    "flush_count",
    "weight_movement",
    "solver_ok",
]
TIMING_COLUMNS = ["time_forward", "time_sketch", "time_solve", "time_update", "time_flush"]


def _apply_thread_cap() -> None:
    cap = os.environ.get("SUBQUAD_THREADS")
    if cap is None:
        return
    try:
        workers = int(cap)
    except ValueError:
        raise SystemExit("SUBQUAD_THREADS must be an integer")
    if workers <= 0:
        return  # 0 = auto
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(workers))


def parse_config(path: str, allowed: dict) -> dict:
    """Flat key=value file with # comments; unknown keys are rejected."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in allowed:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = allowed[key](val)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {val!r}")
    return values


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_train_csv(path: str, metrics, timings: bool) -> None:
    cols = TRAIN_COLUMNS + (TIMING_COLUMNS if timings else [])
    lines = [",".join(cols)]
    for mt in metrics:
        lines.append(",".join(_fmt(getattr(mt, c)) for c in cols))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_gen_data(args) -> int:
    from .data import gen_data, save_dataset

    try:
        X, y = gen_data(args.n, args.d, seed=args.seed, min_separation=args.sep)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        save_dataset(args.out, X, y)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.n} x {args.d} dataset to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    import numpy as np

    from .data import load_dataset
    from .errors import NoConvergenceError, SubquadError
    from .net import NetConfig
    from .training import TrainConfig, TrainState

    try:
        raw = parse_config(args.config, TRAIN_KEYS)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        X, y = load_dataset(args.data)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    d, n = X.shape
    seed = args.seed if args.seed is not None else raw.get("seed", 0)
    try:
        net = NetConfig(
            d=d,
            m=raw.get("m", 256),
            L=raw.get("L", 2),
            b=raw.get("b", 0.0),
            seed=raw.get("net_seed", seed),
        )
        cfg = TrainConfig(
            net=net,
            n=n,
            T=raw.get("T", 10),
            target_residual=raw.get("target_residual", 0.0),
            eps0=raw.get("eps0"),
            sketch_variant=raw.get("sketch", "tensorsrht"),
            s1=raw.get("s1"),
            s2=raw.get("s2"),
            lrm_threshold=raw.get("lrm_threshold"),
            lambda_mode=raw.get("lambda_mode", "gram_init"),
            lambda_value=raw.get("lambda_value"),
            solver_delta=raw.get("solver_delta", 0.01),
            continue_on_noconvergence=bool(raw.get("continue_on_noconvergence", 0)),
            seed=seed,
        )
    except (ValueError, SubquadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        state = TrainState(cfg, X, y)
        for _ in range(cfg.T):
            if state.metrics[-1].residual <= cfg.target_residual:
                break
            state.step()
        metrics = state.metrics
    except NoConvergenceError as exc:
        print(f"error: regression did not converge: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, SubquadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        _write_train_csv(args.out, metrics, args.timings)
        if args.dump_delta:
            L = cfg.net.L
            delta = state.lrm.to_dense(L) - state.weights.layers[L - 1]
            delta.astype(np.float64).tofile(args.dump_delta)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    final = metrics[-1].residual
    print(f"final residual {final:.6e} after {metrics[-1].t} steps")
    if cfg.target_residual > 0 and final > cfg.target_residual:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_bench(args) -> int:
    from .backend import available_backends
    from .bench import bench_csv, run_bench

    raw = {}
    if args.config:
        try:
            raw = parse_config(args.config, BENCH_KEYS)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        m_list = [int(v) for v in args.m.split(",")]
        modes = tuple(args.modes.split(","))
        backends = tuple(args.backends.split(",")) if args.backends else None
        if backends and any(b not in available_backends() for b in backends):
            print(
                f"error: requested backends {backends}, available {available_backends()}",
                file=sys.stderr,
            )
            return EXIT_CONFIG
        rows, slopes = run_bench(
            m_list,
            n=raw.get("n", 8),
            d=raw.get("d", 8),
            L=raw.get("L", 2),
            reps=args.reps,
            modes=modes,
            backends=backends,
            seed=args.seed if args.seed is not None else raw.get("seed", 0),
            b=raw.get("b"),
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    csv = bench_csv(rows, slopes)
    try:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(csv)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for line in csv.splitlines():
        if line.split(",")[-1]:
            print(line)
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import SUITES, run_suite

    kwargs = {}
    if args.suite == "ntk":
        kwargs = {"b": args.b, "lambda_mode": args.lambda_mode}
    try:
        results = run_suite(args.suite, seed=args.seed, **kwargs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subquad",
        description="Subquadratic last-layer training of wide shifted-ReLU networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a unit-norm dataset file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--sep", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="run a training loop and emit per-step CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument(
        "--timings",
        action="store_true",
        help="append wall-clock phase columns (breaks byte reproducibility)",
    )
    p.add_argument(
        "--dump-delta",
        default=None,
        dest="dump_delta",
        help="write the final dense W_L delta as flat float64 binary",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="phase-timing sweep over widths")
    p.add_argument("--config", default=None)
    p.add_argument("--m", required=True, help="comma list, e.g. 512,1024,2048,4096")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--modes", default="fast,dense")
    p.add_argument("--backends", default=None, help="comma list: compiled,python")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", help="run a named statistical suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--b", type=float, default=0.0, help="shift for the ntk suite")
    p.add_argument("--lambda-mode", default="gram_init", dest="lambda_mode")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
