"""Pure-numpy convolution kernels (im2col + BLAS matmul).

Fallback backend used when the compiled extension is unavailable. All
kernels take NCHW float32/float64 arrays and implement cross-correlation;
transposed convolution is expressed through conv2d_backward_input at the
layer level, so these three primitives are the complete kernel surface.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def _out_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def _im2col(xp: np.ndarray, k: int, stride: int, out_h: int, out_w: int) -> np.ndarray:
    n, c = xp.shape[:2]
    cols = np.empty((n, c, k, k, out_h, out_w), dtype=xp.dtype)
    for ki in range(k):
        for kj in range(k):
            cols[:, :, ki, kj] = xp[
                :, :, ki : ki + stride * out_h : stride, kj : kj + stride * out_w : stride
            ]
    return cols


def conv2d_forward(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """y[n,co,oh,ow] = sum_{ci,ki,kj} x[n,ci,oh*s+ki-p,ow*s+kj-p] * w[co,ci,ki,kj]."""
    n, cin, h, wid = x.shape
    cout, cin_w, k, _ = w.shape
    if cin_w != cin:
        raise ValueError(f"weight expects {cin_w} input channels, got {cin}")
    out_h = _out_size(h, k, stride, pad)
    out_w = _out_size(wid, k, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = _im2col(xp, k, stride, out_h, out_w).reshape(n, cin * k * k, out_h * out_w)
    y = np.matmul(w.reshape(cout, -1), cols)
    return y.reshape(n, cout, out_h, out_w)


def conv2d_backward_input(
    dy: np.ndarray, w: np.ndarray, stride: int, pad: int, in_h: int, in_w: int
) -> np.ndarray:
    """Adjoint of conv2d_forward w.r.t. its input (scatter / full correlation)."""
    n, cout, out_h, out_w = dy.shape
    cout_w, cin, k, _ = w.shape
    if cout_w != cout:
        raise ValueError(f"weight expects {cout_w} output channels, got {cout}")
    dcols = np.matmul(w.reshape(cout, -1).T, dy.reshape(n, cout, out_h * out_w))
    dcols = dcols.reshape(n, cin, k, k, out_h, out_w)
    dxp = np.zeros((n, cin, in_h + 2 * pad, in_w + 2 * pad), dtype=dy.dtype)
    for ki in range(k):
        for kj in range(k):
            dxp[:, :, ki : ki + stride * out_h : stride, kj : kj + stride * out_w : stride] += dcols[
                :, :, ki, kj
            ]
    if pad:
        return dxp[:, :, pad : pad + in_h, pad : pad + in_w].copy()
    return dxp


def conv2d_backward_weights(x: np.ndarray, dy: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """Adjoint of conv2d_forward w.r.t. the weights."""
    n, cin, h, wid = x.shape
    n_dy, cout, out_h, out_w = dy.shape
    if n_dy != n:
        raise ValueError(f"batch mismatch: x has {n}, dy has {n_dy}")
    k = h + 2 * pad - stride * (out_h - 1)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = _im2col(xp, k, stride, out_h, out_w).reshape(n, cin * k * k, out_h * out_w)
    dw = np.matmul(dy.reshape(n, cout, -1), cols.transpose(0, 2, 1)).sum(axis=0)
    return dw.reshape(cout, cin, k, k)
