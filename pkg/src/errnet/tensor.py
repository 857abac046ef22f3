"""Dense rank-4 tensors with reverse-mode automatic differentiation.

Every value flowing through the network is a Tensor of shape
(batch, channels, height, width) in row-major float layout. Operations
record a tape of parent links and backward closures; backward() walks the
tape once in reverse topological order and accumulates gradients into the
requires_grad leaves.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np

from . import _kernels as K

DEFAULT_DTYPE = np.float64

_grad_enabled = True


def set_default_dtype(dtype):
    """Switch the engine dtype: float64 (default; all tests and gradient
    checks assume it) or float32 for speed at reduced precision."""
    global DEFAULT_DTYPE
    dt = np.dtype(dtype).type
    if dt not in (np.float64, np.float32):
        raise ValueError(f"supported dtypes are float64 and float32, got {dtype!r}")
    DEFAULT_DTYPE = dt


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """A 4-D array plus optional gradient buffer and tape linkage."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad=False):
        arr = np.ascontiguousarray(data, dtype=DEFAULT_DTYPE)
        if arr.ndim != 4:
            raise ValueError(f"Tensor must be rank 4 (batch, channels, height, width), got rank {arr.ndim}")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        if self.data.size != 1:
            raise ValueError(f"item() requires a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data.copy(), requires_grad=False)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _result(data, parents, backward_fn):
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    return out


def scalar(value):
    """Wrap a python float as a 1x1x1x1 tensor."""
    return Tensor(np.full((1, 1, 1, 1), value, dtype=DEFAULT_DTYPE))


@dataclass
class Conv2dParams:
    """Kernel (out_ch, in_ch, kH, kW), bias (1, out_ch, 1, 1), and geometry."""

    kernel: Tensor
    bias: Tensor
    stride: int = 1
    padding: int = 0
    dilation: int = 1

    def __post_init__(self):
        if self.kernel.shape[0] != self.bias.shape[1] or self.bias.shape != (1, self.kernel.shape[0], 1, 1):
            raise ValueError(
                f"bias shape {self.bias.shape} does not match kernel out_ch {self.kernel.shape[0]}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ValueError(f"padding must be >= 0, got {self.padding}")
        if self.dilation < 1:
            raise ValueError(f"dilation must be >= 1, got {self.dilation}")


def conv2d(x, params):
    """Dilated 2-D cross-correlation plus bias.

    Output spatial size is floor((H + 2*pad - ((k-1)*dilation + 1)) / stride) + 1.
    Differentiable w.r.t. input, kernel, and bias.
    """
    w, b = params.kernel, params.bias
    stride, pad, dil = params.stride, params.padding, params.dilation
    oc, ci, kh, kw = w.shape
    n, c, h, wid = x.shape
    if c != ci:
        raise ValueError(f"conv2d: input has {c} channels (dimension 1) but kernel expects {ci}")
    for size, k, name in ((h, kh, "height"), (wid, kw, "width")):
        eff = (k - 1) * dil + 1
        if eff > size + 2 * pad:
            raise ValueError(
                f"conv2d: effective kernel extent {eff} exceeds padded input {name} {size + 2 * pad}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    y = K.conv2d_forward(xp, w.data, b.data.reshape(-1), stride, dil)
    hp, wp = xp.shape[2], xp.shape[3]

    def backward_fn(gy):
        gxp = K.conv2d_backward_input(gy, w.data, stride, dil, hp, wp)
        gx = gxp[:, :, pad:hp - pad, pad:wp - pad] if pad else gxp
        gw = K.conv2d_backward_kernel(gy, xp, stride, dil, kh, kw)
        gb = gy.sum(axis=(0, 2, 3)).reshape(1, oc, 1, 1)
        return gx, gw, gb

    return _result(y, (x, w, b), backward_fn)


def bilinear_resize(x, out_h, out_w):
    """Align-corners-false bilinear interpolation; identity when the size matches."""
    if out_h < 1 or out_w < 1:
        raise ValueError(f"bilinear_resize: output size must be >= 1, got {out_h}x{out_w}")
    n, c, ih, iw = x.shape
    if (out_h, out_w) == (ih, iw):
        return _result(x.data.copy(), (x,), lambda gy: (gy,))
    y = K.bilinear_forward(x.data, out_h, out_w)
    return _result(y, (x,), lambda gy: (K.bilinear_backward(gy, ih, iw),))


def concat_channels(inputs):
    """Concatenate along the channel axis; gradient splits back per input."""
    if not inputs:
        raise ValueError("concat_channels: need at least one input")
    first = inputs[0].shape
    for t in inputs[1:]:
        s = t.shape
        if s[0] != first[0] or s[2] != first[2] or s[3] != first[3]:
            raise ValueError(f"concat_channels: spatial/batch mismatch {first} vs {s}")
    y = np.concatenate([t.data for t in inputs], axis=1)
    splits = [t.shape[1] for t in inputs]

    def backward_fn(gy):
        grads = []
        at = 0
        for width in splits:
            grads.append(gy[:, at:at + width])
            at += width
        return tuple(grads)

    return _result(y, tuple(inputs), backward_fn)


def _check_same_shape(a, b, op):
    if a.shape != b.shape:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def add(a, b):
    _check_same_shape(a, b, "add")
    return _result(a.data + b.data, (a, b), lambda gy: (gy, gy))


def sub(a, b):
    _check_same_shape(a, b, "sub")
    return _result(a.data - b.data, (a, b), lambda gy: (gy, -gy))


def mul(a, b):
    _check_same_shape(a, b, "mul")
    return _result(a.data * b.data, (a, b), lambda gy: (gy * b.data, gy * a.data))


def div(a, b):
    _check_same_shape(a, b, "div")
    y = a.data / b.data
    return _result(y, (a, b), lambda gy: (gy / b.data, -gy * y / b.data))


def one_minus(a):
    return _result(1.0 - a.data, (a,), lambda gy: (-gy,))


def elementwise(op, a, b=None):
    """Dispatch form of the pointwise ops: op in {add, sub, mul, one_minus}."""
    table = {"add": add, "sub": sub, "mul": mul}
    if op == "one_minus":
        if b is not None:
            raise ValueError("one_minus is unary")
        return one_minus(a)
    if op not in table:
        raise ValueError(f"unknown elementwise op {op!r}")
    if b is None:
        raise ValueError(f"{op} is binary")
    return table[op](a, b)


def add_scalar(a, c):
    return _result(a.data + c, (a,), lambda gy: (gy,))


def mul_scalar(a, c):
    return _result(a.data * c, (a,), lambda gy: (gy * c,))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a):
    s = _sigmoid(a.data)
    return _result(s, (a,), lambda gy: (gy * s * (1.0 - s),))


def relu(a):
    mask = a.data > 0
    return _result(np.where(mask, a.data, 0.0), (a,), lambda gy: (gy * mask,))


def avg_pool(x, kernel, stride=1, padding=0):
    """Local mean; the divisor is always kernel*kernel, so padded zeros count."""
    if kernel < 1:
        raise ValueError(f"avg_pool: kernel must be >= 1, got {kernel}")
    n, c, h, w = x.shape
    if kernel > h + 2 * padding or kernel > w + 2 * padding:
        raise ValueError(
            f"avg_pool: kernel {kernel} larger than padded input {h + 2 * padding}x{w + 2 * padding}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    hp, wp = xp.shape[2], xp.shape[3]
    y = K.avg_pool_forward(xp, kernel, stride)

    def backward_fn(gy):
        gxp = K.avg_pool_backward(gy, kernel, stride, hp, wp)
        return (gxp[:, :, padding:hp - padding, padding:wp - padding] if padding else gxp,)

    return _result(y, (x,), backward_fn)


def stack_channels(x, copies):
    """Replicate a single-channel map into `copies` identical channels."""
    if x.shape[1] != 1:
        raise ValueError(f"stack_channels: input must have 1 channel, got {x.shape[1]}")
    if copies < 1:
        raise ValueError(f"stack_channels: copies must be >= 1, got {copies}")
    y = np.repeat(x.data, copies, axis=1)
    return _result(y, (x,), lambda gy: (gy.sum(axis=1, keepdims=True),))


def sum_all(x):
    """Full reduction to a 1x1x1x1 scalar tensor."""
    y = np.full((1, 1, 1, 1), x.data.sum(), dtype=DEFAULT_DTYPE)
    return _result(y, (x,), lambda gy: (np.full(x.shape, gy.reshape(-1)[0], dtype=DEFAULT_DTYPE),))


def bce_with_logits(logits, target):
    """Per-pixel binary cross-entropy in the stable log-sum-exp form.

    max(x,0) - x*t + log(1+exp(-|x|)); gradient w.r.t. logits is
    sigmoid(x) - t. The target is treated as constant data.
    """
    _check_same_shape(logits, target, "bce_with_logits")
    x = logits.data
    t = target.data
    y = np.maximum(x, 0.0) - x * t + np.log1p(np.exp(-np.abs(x)))
    return _result(y, (logits,), lambda gy: (gy * (_sigmoid(x) - t),))


def backward(loss):
    """Backpropagate from a scalar tensor, accumulating into leaf .grad buffers.

    A leaf is any requires_grad tensor that no recorded op produced; grads
    add across multiple uses within the graph and across backward() calls.
    """
    if loss.shape != (1, 1, 1, 1):
        raise ValueError(f"backward requires a scalar (1,1,1,1) tensor, got shape {loss.shape}")
    topo = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited and p.requires_grad:
                stack.append((p, False))
    grads = {id(loss): np.ones((1, 1, 1, 1), dtype=DEFAULT_DTYPE)}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward_fn is None:
            node.grad = g if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward_fn(g)):
            if not parent.requires_grad:
                continue
            pid = id(parent)
            grads[pid] = pg if pid not in grads else grads[pid] + pg
