"""Convolution kernel backend selection.

The environment variable STORMLOC_KERNELS picks the implementation:

    numba   jit-compiled loops (default when numba imports cleanly)
    numpy   pure-numpy fallback
    auto    same as unset

Both backends implement the same three functions on float64 arrays and agree
to floating-point roundoff; ``benchmarks/bench_kernels.py`` compares them.
"""

from __future__ import annotations

import os

from ...errors import ConfigError


def _select():
    choice = os.environ.get("STORMLOC_KERNELS", "auto").strip().lower() or "auto"
    if choice == "numpy":
        from . import conv_numpy as mod
        return mod
    if choice == "numba":
        from . import conv_numba as mod
        return mod
    if choice == "auto":
        try:
            from . import conv_numba as mod
            return mod
        except ImportError:
            from . import conv_numpy as mod
            return mod
    raise ConfigError(f"STORMLOC_KERNELS={choice!r}; expected numba, numpy or auto")


_impl = _select()

BACKEND = _impl.BACKEND_NAME
conv2d_forward = _impl.conv2d_forward
conv2d_input_grad = _impl.conv2d_input_grad
conv2d_weight_grad = _impl.conv2d_weight_grad

__all__ = ["BACKEND", "conv2d_forward", "conv2d_input_grad", "conv2d_weight_grad"]
