"""Dataset generation and the on-disk text format.

Format: a header line ``n d`` followed by n lines of d+1 floats (the unit
input then the label), printed with 17 significant digits so the round trip
is bit exact.
"""
from __future__ import annotations

import numpy as np

RESAMPLE_CAP = 1000


def gen_data(
    n: int, d: int, seed: int = 0, min_separation: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Unit-norm Gaussian-direction inputs with pairwise separation, labels U[-1,1].

    Points are accepted one at a time; a candidate closer than
    ``min_separation`` to an accepted point is redrawn, up to RESAMPLE_CAP
    attempts per point.
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    if not 0.0 <= min_separation < np.sqrt(2.0):
        raise ValueError("separation must lie in [0, sqrt(2))")
    rng = np.random.default_rng(seed)
    cols = []
    for _ in range(n):
        for attempt in range(RESAMPLE_CAP):
            x = rng.standard_normal(d)
            norm = np.linalg.norm(x)
            if norm == 0.0:
                continue
            x /= norm
            if all(np.linalg.norm(x - c) >= min_separation for c in cols):
                cols.append(x)
                break
        else:
            raise ValueError(
                f"could not reach separation {min_separation} after "
                f"{RESAMPLE_CAP} resamples; lower it or raise d"
            )
    X = np.column_stack(cols)
    y = rng.uniform(-1.0, 1.0, size=n)
    return X, y


def save_dataset(path: str, X: np.ndarray, y: np.ndarray) -> None:
    n = X.shape[1]
    lines = [f"{n} {X.shape[0]}"]
    for i in range(n):
        vals = list(X[:, i]) + [y[i]]
        lines.append(" ".join(f"{v:.17g}" for v in vals))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("dataset header must be 'n d'")
        n, d = int(header[0]), int(header[1])
        X = np.empty((d, n))
        y = np.empty(n)
        for i in range(n):
            vals = [float(v) for v in fh.readline().split()]
            if len(vals) != d + 1:
                raise ValueError(f"dataset line {i + 2} must hold {d + 1} floats")
            X[:, i] = vals[:d]
            y[i] = vals[d]
    return X, y
