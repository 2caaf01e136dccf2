"""Differentiable layer ops: exactly the set the localization U-Net needs.

Spatial ops accept [C,H,W] or batched [B,C,H,W] tensors. All arithmetic is
float64; convolution dispatches to the selected kernel backend.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DimensionError
from . import kernels
from .tensor import Tensor


def _as_batched(x: Tensor) -> tuple[np.ndarray, bool]:
    if x.data.ndim == 3:
        return x.data[None], True
    if x.data.ndim == 4:
        return x.data, False
    raise DimensionError(f"expected a 3-D or 4-D tensor, got shape {x.shape}")


def conv2d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """3x3 cross-correlation, zero padding 1, stride 1 (spatial dims preserved)."""
    xd, squeeze = _as_batched(x)
    if w.data.ndim != 4 or w.shape[2:] != (3, 3):
        raise DimensionError(f"kernel must be [out,in,3,3], got {w.shape}")
    if b.data.ndim != 1 or b.shape[0] != w.shape[0]:
        raise DimensionError("bias must be one value per output channel")
    if xd.shape[1] != w.shape[1]:
        raise DimensionError(f"input has {xd.shape[1]} channels, kernel expects {w.shape[1]}")
    if xd.shape[2] < 3 or xd.shape[3] < 3:
        raise DimensionError(f"spatial dims {xd.shape[2:]} too small for a 3x3 kernel")
    yd = kernels.conv2d_forward(xd, w.data, b.data)

    def backward(gy: np.ndarray) -> None:
        g = gy[None] if squeeze else gy
        x.grad += kernels.conv2d_input_grad(w.data, g).reshape(x.shape)
        w.grad += kernels.conv2d_weight_grad(xd, g)
        b.grad += g.sum(axis=(0, 2, 3))

    return Tensor(yd[0] if squeeze else yd, parents=(x, w, b), backward_fn=backward)


def relu(x: Tensor) -> Tensor:
    """Elementwise max(x, 0); subgradient at exactly 0 is 0."""
    mask = x.data > 0

    def backward(gy: np.ndarray) -> None:
        x.grad += gy * mask

    return Tensor(np.where(mask, x.data, 0.0), parents=(x,), backward_fn=backward)


def maxpool2(x: Tensor) -> Tensor:
    """2x2 max pooling; gradient routes to the first row-major max per window."""
    xd, squeeze = _as_batched(x)
    nb, nc, h, w = xd.shape
    if h % 2 or w % 2:
        raise DimensionError(f"maxpool2 needs even spatial dims, got {h}x{w}")
    # windows[..., k] with k ordered (0,0), (0,1), (1,0), (1,1)
    windows = xd.reshape(nb, nc, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    windows = np.ascontiguousarray(windows).reshape(nb, nc, h // 2, w // 2, 4)
    arg = windows.argmax(axis=-1)  # argmax returns the first max: row-major tie-break
    yd = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]

    def backward(gy: np.ndarray) -> None:
        g = gy[None] if squeeze else gy
        gwin = np.zeros((nb, nc, h // 2, w // 2, 4))
        np.put_along_axis(gwin, arg[..., None], g[..., None], axis=-1)
        gx = gwin.reshape(nb, nc, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        x.grad += gx.reshape(x.shape)

    return Tensor(yd[0] if squeeze else yd, parents=(x,), backward_fn=backward)


def _interp_matrix(n: int) -> np.ndarray:
    """[2n, n] bilinear weights for 2x upsampling with half-pixel centers.

    Output pixel i samples input coordinate (i + 0.5)/2 - 0.5, clamped to
    [0, n-1].
    """
    m = np.zeros((2 * n, n))
    for i in range(2 * n):
        s = min(max((i + 0.5) / 2.0 - 0.5, 0.0), n - 1.0)
        lo = int(np.floor(s))
        frac = s - lo
        if lo >= n - 1:
            m[i, n - 1] = 1.0
        else:
            m[i, lo] = 1.0 - frac
            m[i, lo + 1] += frac
    return m


_INTERP_CACHE: dict[int, np.ndarray] = {}


def _interp(n: int) -> np.ndarray:
    if n not in _INTERP_CACHE:
        _INTERP_CACHE[n] = _interp_matrix(n)
    return _INTERP_CACHE[n]


def upsample2(x: Tensor) -> Tensor:
    """Bilinear 2x upsampling; backward is the exact transpose (weight scatter)."""
    xd, squeeze = _as_batched(x)
    h, w = xd.shape[2], xd.shape[3]
    rows, cols = _interp(h), _interp(w)
    yd = np.matmul(np.matmul(rows, xd), cols.T)

    def backward(gy: np.ndarray) -> None:
        g = gy[None] if squeeze else gy
        x.grad += np.matmul(np.matmul(rows.T, g), cols).reshape(x.shape)

    return Tensor(yd[0] if squeeze else yd, parents=(x,), backward_fn=backward)


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Stack two tensors along the channel axis, ``a`` first."""
    if a.data.ndim != b.data.ndim:
        raise DimensionError("cannot concat tensors of different rank")
    axis = 0 if a.data.ndim == 3 else 1
    if a.shape[axis + 1:] != b.shape[axis + 1:] or a.shape[:axis] != b.shape[:axis]:
        raise DimensionError(f"spatial/batch dims differ: {a.shape} vs {b.shape}")
    ca = a.shape[axis]

    def backward(gy: np.ndarray) -> None:
        ga, gb = np.split(gy, [ca], axis=axis)
        a.grad += ga
        b.grad += gb

    return Tensor(np.concatenate([a.data, b.data], axis=axis), parents=(a, b), backward_fn=backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    def backward(gy: np.ndarray) -> None:
        x.grad += gy.reshape(x.shape)

    return Tensor(x.data.reshape(shape), parents=(x,), backward_fn=backward)


def stable_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Softmax with max subtraction; plain numpy, no tape."""
    z = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _logsumexp(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    m = logits.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(logits - m).sum(axis=axis, keepdims=True))).squeeze(axis)


def softmax_cross_entropy(logits: Tensor, target: int) -> Tensor:
    """Cross-entropy of a length-N logit vector against one target index."""
    if logits.data.ndim != 1:
        raise DimensionError("softmax_cross_entropy expects a 1-D logit tensor")
    n = logits.shape[0]
    if not 0 <= target < n:
        raise ConfigError(f"target {target} outside [0, {n})")
    loss = _logsumexp(logits.data) - logits.data[target]

    def backward(gy: np.ndarray) -> None:
        g = stable_softmax(logits.data)
        g[target] -= 1.0
        logits.grad += gy.item() * g

    return Tensor(np.asarray(loss), parents=(logits,), backward_fn=backward)


def mean_cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean cross-entropy over a [B, N] batch of logit rows."""
    if logits.data.ndim != 2:
        raise DimensionError("mean_cross_entropy expects a [batch, classes] tensor")
    nb, n = logits.shape
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (nb,):
        raise DimensionError(f"need {nb} targets, got shape {targets.shape}")
    if targets.min() < 0 or targets.max() >= n:
        raise ConfigError("target index outside the logit range")
    rows = np.arange(nb)
    losses = _logsumexp(logits.data, axis=1) - logits.data[rows, targets]
    loss = losses.mean()

    def backward(gy: np.ndarray) -> None:
        g = stable_softmax(logits.data, axis=1)
        g[rows, targets] -= 1.0
        logits.grad += (gy.item() / nb) * g

    return Tensor(np.asarray(loss), parents=(logits,), backward_fn=backward)
