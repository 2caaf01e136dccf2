"""Pure-numpy 3x3 same-padding convolution kernels.

Fallback path: each of the nine kernel taps becomes one BLAS matmul over a
shifted view of the zero-padded input. Slower than the jit path but has no
compiled dependency.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def _padded(x: np.ndarray) -> np.ndarray:
    b, c, h, w = x.shape
    xp = np.zeros((b, c, h + 2, w + 2))
    xp[:, :, 1:-1, 1:-1] = x
    return xp


def conv2d_forward(x: np.ndarray, w: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """x [B,C,H,W], w [O,C,3,3], bias [O] -> [B,O,H,W] (zero pad 1, stride 1)."""
    b, c, h, wd = x.shape
    xp = _padded(x)
    y = np.empty((b, w.shape[0], h, wd))
    y[:] = bias[None, :, None, None]
    for di in range(3):
        for dj in range(3):
            patch = xp[:, :, di:di + h, dj:dj + wd]
            y += np.tensordot(w[:, :, di, dj], patch, axes=([1], [1])).transpose(1, 0, 2, 3)
    return y


def conv2d_input_grad(w: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the input: scatter gy through each kernel tap."""
    b, o, h, wd = gy.shape
    c = w.shape[1]
    gxp = np.zeros((b, c, h + 2, wd + 2))
    for di in range(3):
        for dj in range(3):
            contrib = np.tensordot(gy, w[:, :, di, dj], axes=([1], [0]))  # [B,H,W,C]
            gxp[:, :, di:di + h, dj:dj + wd] += contrib.transpose(0, 3, 1, 2)
    return np.ascontiguousarray(gxp[:, :, 1:-1, 1:-1])


def conv2d_weight_grad(x: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the kernel: correlate gy with shifted input views."""
    b, c, h, wd = x.shape
    o = gy.shape[1]
    xp = _padded(x)
    gw = np.empty((o, c, 3, 3))
    for di in range(3):
        for dj in range(3):
            patch = xp[:, :, di:di + h, dj:dj + wd]
            gw[:, :, di, dj] = np.tensordot(gy, patch, axes=([0, 2, 3], [0, 2, 3]))
    return gw
