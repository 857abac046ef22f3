"""Convolution building blocks shared by the encoder and decoder graph.

A "conv block" is a 3x3 convolution (padding preserves size at stride 1)
followed by ReLU, with no normalization. Map-prediction heads are plain
convolutions without the ReLU so their outputs stay logits.
"""

import numpy as np

from .tensor import Conv2dParams, Tensor, conv2d, relu


def init_conv(rng, out_ch, in_ch, ksize):
    """Uniform weights in +-sqrt(6 / (in_ch * kH * kW)), zero bias.

    The He-style bound keeps activation variance roughly constant through
    conv+ReLU stacks; smaller bounds starve the deep hierarchies (E5 ends
    up orders of magnitude below the input) and stall training.
    """
    bound = np.sqrt(6.0 / (in_ch * ksize * ksize))
    w = rng.uniform(-bound, bound, size=(out_ch, in_ch, ksize, ksize))
    b = np.zeros((1, out_ch, 1, 1))
    return Tensor(w, requires_grad=True), Tensor(b, requires_grad=True)


class ConvBlock:
    """3x3 conv + ReLU (set relu=False / ksize=1 for prediction heads)."""

    def __init__(self, name, in_ch, out_ch, rng, stride=1, dilation=1, ksize=3,
                 padding=None, apply_relu=True):
        if padding is None:
            padding = dilation if ksize == 3 else 0
        self.name = name
        self.apply_relu = apply_relu
        self.weight, self.bias = init_conv(rng, out_ch, in_ch, ksize)
        self.geometry = dict(stride=stride, padding=padding, dilation=dilation)

    @property
    def conv_params(self):
        return Conv2dParams(kernel=self.weight, bias=self.bias, **self.geometry)

    def __call__(self, x):
        y = conv2d(x, self.conv_params)
        return relu(y) if self.apply_relu else y

    def parameters(self):
        return {f"{self.name}.w": self.weight, f"{self.name}.b": self.bias}


def collect_parameters(blocks):
    params = {}
    for block in blocks:
        params.update(block.parameters())
    return params
