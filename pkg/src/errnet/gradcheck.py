"""Finite-difference verification of tape gradients."""

import numpy as np

from .tensor import Tensor, backward, no_grad


def grad_check(fn, point, eps=1e-5):
    """Compare analytic gradients of a scalar-valued tensor function against
    central finite differences at `point`.

    Perturbs every coordinate; returns the maximum relative error
    |a - n| / max(1e-8, |a| + |n|).
    """
    p = Tensor(point.data.copy(), requires_grad=True)
    out = fn(p)
    if out.shape != (1, 1, 1, 1):
        raise ValueError(f"grad_check: fn must return a scalar tensor, got shape {out.shape}")
    backward(out)
    analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
    if not np.isfinite(analytic).all():
        raise ValueError("grad_check: non-finite analytic gradient")
    flat = p.data.reshape(-1)
    worst = 0.0
    with no_grad():
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            f_plus = fn(p).item()
            flat[i] = saved - eps
            f_minus = fn(p).item()
            flat[i] = saved
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise ValueError("grad_check: non-finite function value during probing")
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = analytic.reshape(-1)[i]
            err = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            worst = max(worst, err)
    return worst


def directional_grad_check(loss_fn, param, eps=1e-6, rng=None):
    """Central-difference check of d loss / d param along one random direction.

    Cheap enough to run against every parameter group of the full network;
    assumes param.grad already holds the analytic gradient.
    """
    if param.grad is None:
        raise ValueError("directional_grad_check: param has no gradient")
    rng = rng or np.random.default_rng(0)
    u = rng.standard_normal(param.shape)
    u /= np.sqrt((u * u).sum())
    analytic = float((param.grad * u).sum())
    saved = param.data
    with no_grad():
        param.data = saved + eps * u
        f_plus = loss_fn().item()
        param.data = saved - eps * u
        f_minus = loss_fn().item()
    param.data = saved
    numeric = (f_plus - f_minus) / (2.0 * eps)
    return abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
