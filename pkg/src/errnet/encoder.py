"""Five-hierarchy strided encoder producing features E1..E5.

Strides are fixed at (4, 4, 8, 16, 32) relative to the input: a two-step
stem reaches stride 4 (E1), E2 refines at the same resolution, and each
deeper hierarchy halves the grid with a strided block followed by a
non-strided one. E3..E5 serve as the semantic priors for the decoder.
"""

from dataclasses import dataclass, field

from .blocks import ConvBlock, collect_parameters
from .tensor import Tensor

STRIDES = (4, 4, 8, 16, 32)

DESK_CHANNELS = (16, 32, 32, 64, 64)
FULL_SCALE_CHANNELS = (64, 256, 512, 1024, 2048)


@dataclass
class EncoderConfig:
    channels: tuple = DESK_CHANNELS

    def __post_init__(self):
        if len(self.channels) != 5 or any(c < 1 for c in self.channels):
            raise ValueError(f"encoder needs five channel counts >= 1, got {self.channels}")

    @classmethod
    def full_scale(cls):
        return cls(channels=FULL_SCALE_CHANNELS)


@dataclass
class FeaturePyramid:
    e1: Tensor
    e2: Tensor
    e3: Tensor
    e4: Tensor
    e5: Tensor
    strides: tuple = STRIDES
    channels: tuple = field(default=DESK_CHANNELS)

    def __iter__(self):
        return iter((self.e1, self.e2, self.e3, self.e4, self.e5))


class Encoder:
    def __init__(self, config, rng):
        c1, c2, c3, c4, c5 = config.channels
        self.config = config
        self.stem1 = ConvBlock("encoder.stem1", 3, c1, rng, stride=2)
        self.stem2 = ConvBlock("encoder.stem2", c1, c1, rng, stride=2)
        self.block2 = ConvBlock("encoder.block2", c1, c2, rng)
        self.block3a = ConvBlock("encoder.block3a", c2, c3, rng, stride=2)
        self.block3b = ConvBlock("encoder.block3b", c3, c3, rng)
        self.block4a = ConvBlock("encoder.block4a", c3, c4, rng, stride=2)
        self.block4b = ConvBlock("encoder.block4b", c4, c4, rng)
        self.block5a = ConvBlock("encoder.block5a", c4, c5, rng, stride=2)
        self.block5b = ConvBlock("encoder.block5b", c5, c5, rng)
        self._blocks = (self.stem1, self.stem2, self.block2, self.block3a, self.block3b,
                        self.block4a, self.block4b, self.block5a, self.block5b)

    def parameters(self):
        return collect_parameters(self._blocks)

    def forward(self, image):
        n, c, h, w = image.shape
        if c != 3:
            raise ValueError(f"encoder expects 3 input channels, got {c}")
        if h % 32 or w % 32:
            raise ValueError(f"input size {h}x{w} must be a multiple of 32")
        e1 = self.stem2(self.stem1(image))
        e2 = self.block2(e1)
        e3 = self.block3b(self.block3a(e2))
        e4 = self.block4b(self.block4a(e3))
        e5 = self.block5b(self.block5a(e4))
        return FeaturePyramid(e1, e2, e3, e4, e5, channels=self.config.channels)

    __call__ = forward
