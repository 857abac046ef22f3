"""Desk-scale camouflaged-object detection: a from-scratch autodiff engine,
the edge-based reversible re-calibration network built on it, the four
segmentation metrics, a synthetic camouflage dataset generator, and a
train/predict/eval CLI."""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend  # noqa: F401
from .tensor import Tensor  # noqa: F401
