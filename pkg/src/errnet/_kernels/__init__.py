"""Hot-loop kernels with two interchangeable implementations.

ERRNET_BACKEND selects the implementation set:

  numba  every kernel jitted (import error if numba is missing)
  numpy  every kernel pure vectorized numpy
  auto   (default) measured-fastest mix: contraction-style kernels
         (conv2d_*, avg_pool_forward) go through numpy, whose im2col/
         slice-accumulate forms hit BLAS and fused loops; scatter/gather
         kernels (bilinear_*, avg_pool_backward, edt_*) go through numba,
         where jitted loops beat np.add.at by 1-2 orders of magnitude.
         Falls back to pure numpy when numba is unavailable.

benchmarks/bench_kernels.py reproduces the comparison on any machine.
"""

import os

_NUMPY_IN_AUTO = (
    "conv2d_forward",
    "conv2d_backward_input",
    "conv2d_backward_kernel",
    "avg_pool_forward",
)
_NUMBA_IN_AUTO = (
    "avg_pool_backward",
    "bilinear_forward",
    "bilinear_backward",
    "edt_sq",
    "edt_sq_indices",
)
_NAMES = _NUMPY_IN_AUTO + _NUMBA_IN_AUTO


def _select_backend():
    choice = os.environ.get("ERRNET_BACKEND", "auto").strip().lower() or "auto"
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"ERRNET_BACKEND must be 'auto', 'numba', or 'numpy', got {choice!r}")
    from . import numpy_backend
    if choice == "numpy":
        return {name: getattr(numpy_backend, name) for name in _NAMES}, "numpy"
    try:
        from . import numba_backend
    except ImportError:
        if choice == "numba":
            raise
        return {name: getattr(numpy_backend, name) for name in _NAMES}, "numpy"
    if choice == "numba":
        return {name: getattr(numba_backend, name) for name in _NAMES}, "numba"
    table = {name: getattr(numpy_backend, name) for name in _NUMPY_IN_AUTO}
    table.update({name: getattr(numba_backend, name) for name in _NUMBA_IN_AUTO})
    return table, "auto"


_TABLE, BACKEND = _select_backend()

conv2d_forward = _TABLE["conv2d_forward"]
conv2d_backward_input = _TABLE["conv2d_backward_input"]
conv2d_backward_kernel = _TABLE["conv2d_backward_kernel"]
avg_pool_forward = _TABLE["avg_pool_forward"]
avg_pool_backward = _TABLE["avg_pool_backward"]
bilinear_forward = _TABLE["bilinear_forward"]
bilinear_backward = _TABLE["bilinear_backward"]
edt_sq = _TABLE["edt_sq"]
edt_sq_indices = _TABLE["edt_sq_indices"]
