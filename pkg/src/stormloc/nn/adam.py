"""Adam optimizer with bias correction, operating on named parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..errors import DimensionError, NumericError


@dataclass
class AdamState:
    """Step counter and per-parameter moment accumulators."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Mapping[str, np.ndarray], lr: float = 1e-3) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            lr=lr,
        )


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
) -> AdamState:
    """One in-place Adam update: theta -= lr * m_hat / (sqrt(v_hat) + eps)."""
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for key, theta in params.items():
        g = grads[key]
        if g.shape != theta.shape:
            raise DimensionError(f"gradient shape {g.shape} != parameter shape {theta.shape} for {key}")
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient for parameter {key}")
        m = state.m[key]
        v = state.v[key]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        # squaring can overflow to inf long before the gradients do, which
        # would silently freeze the parameter instead of failing
        if not np.isfinite(v).all():
            raise NumericError(f"second-moment overflow for parameter {key}")
        theta -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return state
