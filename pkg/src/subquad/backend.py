"""Kernel backend selection: compiled extension when available, numpy otherwise.

The environment variable ``SUBQUAD_BACKEND`` forces a choice:
``auto`` (default), ``compiled``, or ``python``.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_impl = _kernels_py


def available_backends() -> list[str]:
    names = ["python"]
    if _ckernels is not None:
        names.insert(0, "compiled")
    return names


def use_backend(name: str) -> None:
    global _impl
    if name == "python":
        _impl = _kernels_py
    elif name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available")
        _impl = _ckernels
    elif name == "auto":
        _impl = _ckernels if _ckernels is not None else _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")


def active_backend() -> str:
    return _impl.NAME


def fwht_inplace(x: np.ndarray) -> None:
    _impl.fwht_inplace(x)


def fwht_inplace_rows(a: np.ndarray) -> None:
    _impl.fwht_inplace_rows(a)


def colsub_matvec(w: np.ndarray, idx: np.ndarray, vals: np.ndarray) -> np.ndarray:
    return _impl.colsub_matvec(
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(idx, dtype=np.int64),
        np.ascontiguousarray(vals, dtype=np.float64),
    )


def rowsub_matvec(w: np.ndarray, idx: np.ndarray, vals: np.ndarray) -> np.ndarray:
    return _impl.rowsub_matvec(
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(idx, dtype=np.int64),
        np.ascontiguousarray(vals, dtype=np.float64),
    )


use_backend(os.environ.get("SUBQUAD_BACKEND", "auto"))
