"""Numerical verification sweep used by the `gradcheck` command.

Runs coordinate-exhaustive finite-difference checks on every tape op at
small sizes, then a directional check of the full training loss against
every parameter group of a freshly seeded desk-scale model at 1x3x32x32.
"""

from collections import OrderedDict

import numpy as np

from . import model as model_mod
from . import tensor as T
from .config import TrainConfig
from .encoder import EncoderConfig
from .gradcheck import directional_grad_check, grad_check
from .losses import total_loss
from .synth import SynthConfig, synth_generate

OP_TOLERANCE = 1e-5
LOSS_TOLERANCE = 1e-3


def _rand(rng, shape, lo=-1.0, hi=1.0):
    return T.Tensor(rng.uniform(lo, hi, size=shape))


def _scalarize(rng, op):
    """Wrap a tensor->tensor op into a scalar function via a fixed random
    linear functional, so grad_check can probe it."""
    probe = {}

    def fn(t):
        out = op(t)
        if out.shape not in probe:
            probe[out.shape] = np.random.default_rng(1234).uniform(-1, 1, size=out.shape)
        return T.sum_all(T.mul(out, T.Tensor(probe[out.shape])))

    return fn


def op_checks(seed=0, eps=1e-5):
    """Max relative finite-difference error per op, exhaustively per coordinate."""
    rng = np.random.default_rng(seed)
    report = OrderedDict()

    x = _rand(rng, (1, 2, 6, 6))
    w = _rand(rng, (3, 2, 3, 3))
    b = _rand(rng, (1, 3, 1, 1))

    report["conv2d.input"] = grad_check(
        _scalarize(rng, lambda t: T.conv2d(t, T.Conv2dParams(w, b, 1, 2, 2))), x, eps)
    report["conv2d.kernel"] = grad_check(
        _scalarize(rng, lambda t: T.conv2d(x, T.Conv2dParams(t, b, 1, 2, 2))), w, eps)
    report["conv2d.bias"] = grad_check(
        _scalarize(rng, lambda t: T.conv2d(x, T.Conv2dParams(w, t, 1, 2, 2))), b, eps)
    report["conv2d.strided"] = grad_check(
        _scalarize(rng, lambda t: T.conv2d(t, T.Conv2dParams(w, b, 2, 1, 1))), x, eps)
    report["bilinear_resize.up"] = grad_check(
        _scalarize(rng, lambda t: T.bilinear_resize(t, 13, 9)), x, eps)
    report["bilinear_resize.down"] = grad_check(
        _scalarize(rng, lambda t: T.bilinear_resize(t, 3, 4)), x, eps)

    other = _rand(rng, (1, 2, 6, 6))
    report["concat_channels"] = grad_check(
        _scalarize(rng, lambda t: T.concat_channels([t, other])), x, eps)
    report["add"] = grad_check(_scalarize(rng, lambda t: T.add(t, other)), x, eps)
    report["sub"] = grad_check(_scalarize(rng, lambda t: T.sub(t, other)), x, eps)
    report["mul"] = grad_check(_scalarize(rng, lambda t: T.mul(t, other)), x, eps)
    report["one_minus"] = grad_check(_scalarize(rng, T.one_minus), x, eps)
    denom = _rand(rng, (1, 2, 6, 6), lo=0.5, hi=2.0)
    report["div"] = grad_check(_scalarize(rng, lambda t: T.div(t, denom)), x, eps)
    report["sigmoid"] = grad_check(_scalarize(rng, T.sigmoid), x, eps)

    away = T.Tensor(np.where(np.abs(x.data) < 0.2, 0.5, x.data))
    report["relu"] = grad_check(_scalarize(rng, T.relu), away, eps)
    report["avg_pool"] = grad_check(
        _scalarize(rng, lambda t: T.avg_pool(t, kernel=3, stride=2, padding=1)), x, eps)

    single = _rand(rng, (1, 1, 5, 5))
    report["stack_channels"] = grad_check(
        _scalarize(rng, lambda t: T.stack_channels(t, 4)), single, eps)
    target = T.Tensor((rng.uniform(size=(1, 2, 6, 6)) > 0.5).astype(float))
    report["bce_with_logits"] = grad_check(
        _scalarize(rng, lambda t: T.bce_with_logits(t, target)), x, eps)
    report["sum"] = grad_check(lambda t: T.sum_all(t), x, eps)
    return report


def loss_group_checks(seed=0, eps=1e-6):
    """Directional finite-difference check of the total loss per parameter group."""
    cfg = TrainConfig(seed=seed)
    net = model_mod.ErrNet(EncoderConfig(cfg.encoder_channels),
                           aspp_mid_channels=cfg.aspp_mid_channels, seed=seed)
    sample = synth_generate(SynthConfig(seed=seed, count=1, size=32))[0]
    image = T.Tensor(sample.image[None])
    g_mask = T.Tensor(sample.mask[None])
    g_edge = T.Tensor(sample.edge[None])

    def loss_fn():
        return total_loss(net(image), g_mask, g_edge).node

    net.zero_grad()
    T.backward(loss_fn())
    rng = np.random.default_rng(seed + 1)
    report = OrderedDict()
    for name, param in net.parameters().items():
        report[f"loss/{name}"] = directional_grad_check(loss_fn, param, eps=eps, rng=rng)
    return report


def run_gradcheck(seed=0):
    """Full sweep; returns (report, ok) where ok means every entry passed."""
    report = op_checks(seed=seed)
    thresholds = {name: OP_TOLERANCE for name in report}
    losses = loss_group_checks(seed=seed)
    report.update(losses)
    thresholds.update({name: LOSS_TOLERANCE for name in losses})
    ok = all(report[name] < thresholds[name] for name in report)
    return report, thresholds, ok
