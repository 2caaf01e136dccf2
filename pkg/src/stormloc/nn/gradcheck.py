"""Central finite-difference gradient oracle, independent of the tape."""

from __future__ import annotations

from typing import Callable

import numpy as np


def finite_diff_grad(
    f: Callable[[np.ndarray], float],
    x: np.ndarray,
    h: float = 1e-5,
) -> np.ndarray:
    """Per-coordinate central differences (f(x + h e) - f(x - h e)) / 2h."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def grad_close(
    analytic: np.ndarray,
    numeric: np.ndarray,
    rel: float = 1e-4,
    abs_floor: float = 1e-6,
) -> bool:
    """Elementwise |a - n| <= abs_floor + rel * max(|a|, |n|)."""
    a = np.asarray(analytic)
    n = np.asarray(numeric)
    return bool(np.all(np.abs(a - n) <= abs_floor + rel * np.maximum(np.abs(a), np.abs(n))))
