"""Benchmark the jit-compiled conv kernels against the pure-numpy fallback.

Runs the desk-preset layer stack (forward, input-grad, weight-grad) at a
given batch size through both backends and prints per-layer and total
timings plus the speedup. Invoke as:

    python benchmarks/bench_kernels.py [--batch 32] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import stormloc.nn.kernels.conv_numba as numba_backend
import stormloc.nn.kernels.conv_numpy as numpy_backend

# (C_in, H, W, C_out) of every conv in the desk-preset network on the
# default 32x56 grid, encoder to head.
DESK_LAYERS = [
    (2, 32, 56, 8), (8, 32, 56, 8),
    (8, 16, 28, 16), (16, 16, 28, 16),
    (16, 8, 14, 32), (32, 8, 14, 32),
    (32, 4, 7, 64), (64, 4, 7, 64),
    (96, 8, 14, 32), (32, 8, 14, 32),
    (48, 16, 28, 16), (16, 16, 28, 16),
    (24, 32, 56, 8), (8, 32, 56, 8),
    (8, 32, 56, 1),
]


def time_backend(backend, batch: int, repeat: int, rng: np.random.Generator) -> dict:
    totals = {"forward": 0.0, "input_grad": 0.0, "weight_grad": 0.0}
    for (c, h, w, o) in DESK_LAYERS:
        x = rng.standard_normal((batch, c, h, w))
        wk = rng.standard_normal((o, c, 3, 3))
        bias = rng.standard_normal(o)
        gy = rng.standard_normal((batch, o, h, w))
        for name, fn, args in (
            ("forward", backend.conv2d_forward, (x, wk, bias)),
            ("input_grad", backend.conv2d_input_grad, (wk, gy)),
            ("weight_grad", backend.conv2d_weight_grad, (x, gy)),
        ):
            fn(*args)  # warm-up / jit compile
            t0 = time.perf_counter()
            for _ in range(repeat):
                fn(*args)
            totals[name] += (time.perf_counter() - t0) / repeat
    return totals


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"desk-preset conv stack, batch {args.batch}, mean of {args.repeat} runs\n")
    results = {}
    for backend in (numba_backend, numpy_backend):
        name = backend.BACKEND_NAME
        results[name] = time_backend(backend, args.batch, args.repeat, rng)
        totals = results[name]
        full = sum(totals.values())
        print(f"{name:>6}: forward {totals['forward'] * 1e3:7.1f} ms | "
              f"input-grad {totals['input_grad'] * 1e3:7.1f} ms | "
              f"weight-grad {totals['weight_grad'] * 1e3:7.1f} ms | "
              f"step total {full * 1e3:7.1f} ms")
    speedup = sum(results["numpy"].values()) / sum(results["numba"].values())
    print(f"\nnumba speedup over numpy fallback: {speedup:.2f}x")


if __name__ == "__main__":
    main()
