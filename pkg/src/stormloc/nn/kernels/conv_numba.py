"""Jit-compiled 3x3 same-padding convolution kernels (the default hot path).

All three kernels parallelize only over axes whose elements are written by a
single thread with a fixed serial accumulation order, so results are
bit-reproducible run to run.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

BACKEND_NAME = "numba"


@njit(cache=True, parallel=True)
def conv2d_forward(x: np.ndarray, w: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """x [B,C,H,W], w [O,C,3,3], bias [O] -> [B,O,H,W] (zero pad 1, stride 1)."""
    nb, nc, h, wd = x.shape
    no = w.shape[0]
    y = np.empty((nb, no, h, wd))
    for b in prange(nb):
        for o in range(no):
            for i in range(h):
                for j in range(wd):
                    y[b, o, i, j] = bias[o]
            for c in range(nc):
                for di in range(3):
                    i0 = max(0, 1 - di)
                    i1 = min(h, h + 1 - di)
                    for dj in range(3):
                        j0 = max(0, 1 - dj)
                        j1 = min(wd, wd + 1 - dj)
                        wv = w[o, c, di, dj]
                        for i in range(i0, i1):
                            xi = i + di - 1
                            for j in range(j0, j1):
                                y[b, o, i, j] += wv * x[b, c, xi, j + dj - 1]
    return y


@njit(cache=True, parallel=True)
def conv2d_input_grad(w: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the input, same layout as the forward input."""
    nb, no, h, wd = gy.shape
    nc = w.shape[1]
    gx = np.zeros((nb, nc, h, wd))
    for b in prange(nb):
        for o in range(no):
            for c in range(nc):
                for di in range(3):
                    i0 = max(0, 1 - di)
                    i1 = min(h, h + 1 - di)
                    for dj in range(3):
                        j0 = max(0, 1 - dj)
                        j1 = min(wd, wd + 1 - dj)
                        wv = w[o, c, di, dj]
                        for i in range(i0, i1):
                            xi = i + di - 1
                            for j in range(j0, j1):
                                gx[b, c, xi, j + dj - 1] += wv * gy[b, o, i, j]
    return gx


@njit(cache=True, parallel=True)
def _weight_grad_per_sample(x: np.ndarray, gy: np.ndarray) -> np.ndarray:
    # Per-sample partials keep both streamed planes cache-resident; the
    # cross-batch reduction happens outside in a fixed order. The inner loop
    # accumulates all three column taps of a kernel row in one pass.
    nb, nc, h, wd = x.shape
    no = gy.shape[1]
    gw = np.empty((nb, no, nc, 3, 3))
    for b in prange(nb):
        for o in range(no):
            for c in range(nc):
                for di in range(3):
                    i0 = max(0, 1 - di)
                    i1 = min(h, h + 1 - di)
                    a0 = 0.0
                    a1 = 0.0
                    a2 = 0.0
                    for i in range(i0, i1):
                        xi = i + di - 1
                        g = gy[b, o, i, 0]
                        a1 += g * x[b, c, xi, 0]
                        a2 += g * x[b, c, xi, 1]
                        for j in range(1, wd - 1):
                            g = gy[b, o, i, j]
                            a0 += g * x[b, c, xi, j - 1]
                            a1 += g * x[b, c, xi, j]
                            a2 += g * x[b, c, xi, j + 1]
                        g = gy[b, o, i, wd - 1]
                        a0 += g * x[b, c, xi, wd - 2]
                        a1 += g * x[b, c, xi, wd - 1]
                    gw[b, o, c, di, 0] = a0
                    gw[b, o, c, di, 1] = a1
                    gw[b, o, c, di, 2] = a2
    return gw


def conv2d_weight_grad(x: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the kernel, accumulated over batch and space."""
    return _weight_grad_per_sample(x, gy).sum(axis=0)
