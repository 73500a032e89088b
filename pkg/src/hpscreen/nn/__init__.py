"""Minimal neural-net stack: kernels, layers, optimizer.

The convolution kernels come in two interchangeable backends: a compiled
Cython extension (built at install time) and a pure-numpy fallback. The
extension is picked automatically when importable; set HPSCREEN_BACKEND to
"numpy" or "ext" to force one (tests and benchmarks do).
"""

from __future__ import annotations

import os

import numpy as np

from . import conv_numpy

try:
    from . import _conv_ext
except ImportError:
    _conv_ext = None

_num_threads = 1


def available_backends() -> tuple[str, ...]:
    return ("numpy",) if _conv_ext is None else ("ext", "numpy")


def _pick_default() -> str:
    requested = os.environ.get("HPSCREEN_BACKEND", "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested == "ext":
        if _conv_ext is None:
            raise ImportError("HPSCREEN_BACKEND=ext but the compiled extension is not built")
        return "ext"
    if requested:
        raise ValueError(f"unknown HPSCREEN_BACKEND {requested!r}; use 'ext' or 'numpy'")
    return "ext" if _conv_ext is not None else "numpy"


_backend = _pick_default()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    global _backend
    _backend = name


def set_num_threads(n: int) -> None:
    """Worker threads for the compiled kernels (results are identical for any n)."""
    global _num_threads
    _num_threads = max(1, int(n))


def get_num_threads() -> int:
    return _num_threads


def _prep(*arrays: np.ndarray) -> list[np.ndarray]:
    dtype = np.result_type(*arrays)
    if dtype not in (np.float32, np.float64):
        dtype = np.float64
    return [np.ascontiguousarray(a, dtype=dtype) for a in arrays]


def conv2d_forward(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    x, w = _prep(x, w)
    if _backend == "ext":
        return _conv_ext.conv2d_forward(x, w, stride, pad, _num_threads)
    return conv_numpy.conv2d_forward(x, w, stride, pad)


def conv2d_backward_input(
    dy: np.ndarray, w: np.ndarray, stride: int, pad: int, in_h: int, in_w: int
) -> np.ndarray:
    dy, w = _prep(dy, w)
    if _backend == "ext":
        return _conv_ext.conv2d_backward_input(dy, w, stride, pad, in_h, in_w, _num_threads)
    return conv_numpy.conv2d_backward_input(dy, w, stride, pad, in_h, in_w)


def conv2d_backward_weights(x: np.ndarray, dy: np.ndarray, stride: int, pad: int) -> np.ndarray:
    x, dy = _prep(x, dy)
    if _backend == "ext":
        return _conv_ext.conv2d_backward_weights(x, dy, stride, pad, _num_threads)
    return conv_numpy.conv2d_backward_weights(x, dy, stride, pad)


from .layers import (  # noqa: E402
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    LeakyReLU,
    Parameter,
    Sequential,
    Sigmoid,
    mse_grad,
    mse_loss,
)
from .optim import Adam  # noqa: E402

__all__ = [
    "Adam",
    "BatchNorm2d",
    "Conv2d",
    "ConvTranspose2d",
    "LeakyReLU",
    "Parameter",
    "Sequential",
    "Sigmoid",
    "available_backends",
    "conv2d_backward_input",
    "conv2d_backward_weights",
    "conv2d_forward",
    "get_backend",
    "get_num_threads",
    "mse_grad",
    "mse_loss",
    "set_backend",
    "set_num_threads",
]
