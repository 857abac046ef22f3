#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on training-scale shapes, reports wall time per call
for both backends plus the max absolute disagreement. Usage:

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from errnet._kernels import numpy_backend

try:
    from errnet._kernels import numba_backend
except ImportError:
    numba_backend = None


def timed(fn, args, repeat):
    fn(*args)  # warmup / jit compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = fn(*args)
    return (time.perf_counter() - t0) / repeat, out


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(np.abs(np.asarray(x, dtype=np.float64)
                          - np.asarray(y, dtype=np.float64)).max()
                   for x, y in zip(a, b))
    return np.abs(a - b).max()


def cases(rng):
    xp = rng.standard_normal((4, 64, 18, 18))
    w = rng.standard_normal((64, 64, 3, 3))
    b = rng.standard_normal(64)
    gy = rng.standard_normal((4, 64, 16, 16))
    pool_in = rng.standard_normal((4, 1, 94, 94))
    pool_gy = rng.standard_normal((4, 1, 64, 64))
    small = rng.standard_normal((4, 64, 8, 8))
    big_gy = rng.standard_normal((4, 64, 64, 64))
    fg = rng.uniform(size=(352, 352)) < 0.1
    return [
        ("conv2d_forward", "conv2d_forward", (xp, w, b, 1, 1)),
        ("conv2d_backward_input", "conv2d_backward_input", (gy, w, 1, 1, 18, 18)),
        ("conv2d_backward_kernel", "conv2d_backward_kernel", (gy, xp, 1, 1, 3, 3)),
        ("avg_pool_forward 31x31", "avg_pool_forward", (pool_in, 31, 1)),
        ("avg_pool_backward 31x31", "avg_pool_backward", (pool_gy, 31, 1, 94, 94)),
        ("bilinear_forward 8->64", "bilinear_forward", (small, 64, 64)),
        ("bilinear_backward 64->8", "bilinear_backward", (big_gy, 8, 8)),
        ("edt_sq_indices 352x352", "edt_sq_indices", (fg,)),
    ]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s} {'max|diff|':>10s}")
    for label, name, call_args in cases(rng):
        t_np, out_np = timed(getattr(numpy_backend, name), call_args, args.repeat)
        if numba_backend is None:
            print(f"{label:28s} {t_np * 1e3:9.2f}ms {'-':>10s} {'-':>8s} {'-':>10s}")
            continue
        t_nb, out_nb = timed(getattr(numba_backend, name), call_args, args.repeat)
        diff = max_diff(out_np, out_nb)
        print(f"{label:28s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms "
              f"{t_np / t_nb:7.1f}x {diff:10.2e}")
    if numba_backend is None:
        print("numba not importable; fallback timings only")


if __name__ == "__main__":
    main()
