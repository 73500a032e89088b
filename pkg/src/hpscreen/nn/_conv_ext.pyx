# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled convolution kernels: fused im2col + BLAS GEMM.

Same contract as conv_numpy. Forward and input-gradient parallelize over the
batch (each output element is written by exactly one thread, so results are
bit-identical for any thread count); the weight gradient accumulates
serially over the batch to keep summation order fixed.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange, threadid
from scipy.linalg.cython_blas cimport dgemm, sgemm

BACKEND_NAME = "ext"

ctypedef fused real_t:
    float
    double


cdef inline void _gemm_rm(char ta, char tb, int m, int n, int k,
                          real_t* a, int lda, real_t* b, int ldb,
                          real_t beta, real_t* c, int ldc) noexcept nogil:
    # Row-major C(m,n) = op(A)op(B) + beta*C, done as column-major
    # C^T = op(B)^T op(A)^T with swapped operands.
    cdef real_t one = 1.0
    if real_t is float:
        sgemm(&tb, &ta, &n, &m, &k, &one, b, &ldb, a, &lda, &beta, c, &ldc)
    else:
        dgemm(&tb, &ta, &n, &m, &k, &one, b, &ldb, a, &lda, &beta, c, &ldc)


cdef inline void _im2col_one(const real_t* x, real_t* cols,
                             int cin, int h, int w, int k, int stride, int pad,
                             int out_h, int out_w) noexcept nogil:
    cdef int ci, ki, kj, oh, ow, ih, iw, row
    cdef const real_t* xc
    cdef real_t* dst
    cdef int L = out_h * out_w
    for ci in range(cin):
        xc = x + ci * h * w
        for ki in range(k):
            for kj in range(k):
                row = (ci * k + ki) * k + kj
                dst = cols + row * L
                for oh in range(out_h):
                    ih = oh * stride + ki - pad
                    if 0 <= ih < h:
                        for ow in range(out_w):
                            iw = ow * stride + kj - pad
                            dst[oh * out_w + ow] = xc[ih * w + iw] if 0 <= iw < w else 0.0
                    else:
                        for ow in range(out_w):
                            dst[oh * out_w + ow] = 0.0


cdef inline void _col2im_one(const real_t* dcols, real_t* dx,
                             int cin, int h, int w, int k, int stride, int pad,
                             int out_h, int out_w) noexcept nogil:
    cdef int ci, ki, kj, oh, ow, ih, iw, row
    cdef real_t* xc
    cdef int L = out_h * out_w
    for ci in range(cin):
        xc = dx + ci * h * w
        for ki in range(k):
            for kj in range(k):
                row = (ci * k + ki) * k + kj
                for oh in range(out_h):
                    ih = oh * stride + ki - pad
                    if 0 <= ih < h:
                        for ow in range(out_w):
                            iw = ow * stride + kj - pad
                            if 0 <= iw < w:
                                xc[ih * w + iw] += dcols[row * L + oh * out_w + ow]


def conv2d_forward(real_t[:, :, :, ::1] x, real_t[:, :, :, ::1] w,
                   int stride, int pad, int nthreads=1):
    cdef int n = x.shape[0], cin = x.shape[1], h = x.shape[2], wid = x.shape[3]
    cdef int cout = w.shape[0], k = w.shape[2]
    if w.shape[1] != cin:
        raise ValueError(f"weight expects {w.shape[1]} input channels, got {cin}")
    cdef int out_h = (h + 2 * pad - k) // stride + 1
    cdef int out_w = (wid + 2 * pad - k) // stride + 1
    cdef int L = out_h * out_w, ckk = cin * k * k
    dtype = np.float32 if real_t is float else np.float64
    y_arr = np.empty((n, cout, out_h, out_w), dtype=dtype)
    cols_arr = np.empty((nthreads, ckk * L), dtype=dtype)
    cdef real_t[:, :, :, ::1] y = y_arr
    cdef real_t[:, ::1] cols = cols_arr
    cdef int i, tid
    for i in prange(n, nogil=True, num_threads=nthreads, schedule="static"):
        tid = threadid()
        _im2col_one(&x[i, 0, 0, 0], &cols[tid, 0], cin, h, wid, k, stride, pad, out_h, out_w)
        _gemm_rm(b"N", b"N", cout, L, ckk, &w[0, 0, 0, 0], ckk,
                 &cols[tid, 0], L, <real_t>0.0, &y[i, 0, 0, 0], L)
    return y_arr


def conv2d_backward_input(real_t[:, :, :, ::1] dy, real_t[:, :, :, ::1] w,
                          int stride, int pad, int in_h, int in_w, int nthreads=1):
    cdef int n = dy.shape[0], cout = dy.shape[1], out_h = dy.shape[2], out_w = dy.shape[3]
    cdef int cin = w.shape[1], k = w.shape[2]
    if w.shape[0] != cout:
        raise ValueError(f"weight expects {w.shape[0]} output channels, got {cout}")
    cdef int L = out_h * out_w, ckk = cin * k * k
    dtype = np.float32 if real_t is float else np.float64
    dx_arr = np.zeros((n, cin, in_h, in_w), dtype=dtype)
    dcols_arr = np.empty((nthreads, ckk * L), dtype=dtype)
    cdef real_t[:, :, :, ::1] dx = dx_arr
    cdef real_t[:, ::1] dcols = dcols_arr
    cdef int i, tid
    for i in prange(n, nogil=True, num_threads=nthreads, schedule="static"):
        tid = threadid()
        _gemm_rm(b"T", b"N", ckk, L, cout, &w[0, 0, 0, 0], ckk,
                 &dy[i, 0, 0, 0], L, <real_t>0.0, &dcols[tid, 0], L)
        _col2im_one(&dcols[tid, 0], &dx[i, 0, 0, 0], cin, in_h, in_w, k, stride, pad, out_h, out_w)
    return dx_arr


def conv2d_backward_weights(real_t[:, :, :, ::1] x, real_t[:, :, :, ::1] dy,
                            int stride, int pad, int nthreads=1):
    # Serial accumulation over the batch: summation order never depends on
    # the thread count, so training is reproducible bit for bit.
    cdef int n = x.shape[0], cin = x.shape[1], h = x.shape[2], wid = x.shape[3]
    cdef int cout = dy.shape[1], out_h = dy.shape[2], out_w = dy.shape[3]
    if dy.shape[0] != n:
        raise ValueError(f"batch mismatch: x has {n}, dy has {dy.shape[0]}")
    cdef int k = h + 2 * pad - stride * (out_h - 1)
    cdef int L = out_h * out_w, ckk = cin * k * k
    dtype = np.float32 if real_t is float else np.float64
    dw_arr = np.zeros((cout, cin, k, k), dtype=dtype)
    cols_arr = np.empty(ckk * L, dtype=dtype)
    cdef real_t[:, :, :, ::1] dw = dw_arr
    cdef real_t[::1] cols = cols_arr
    cdef int i
    with nogil:
        for i in range(n):
            _im2col_one(&x[i, 0, 0, 0], &cols[0], cin, h, wid, k, stride, pad, out_h, out_w)
            _gemm_rm(b"N", b"T", cout, ckk, L, &dy[i, 0, 0, 0], L,
                     &cols[0], L, <real_t>1.0, &dw[0, 0, 0, 0], ckk)
    return dw_arr
