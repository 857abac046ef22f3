"""The full detection graph: ASPP global prior, SEA edge prior, and the
cascade of reversible re-calibration units.

Data flow: encoder -> ASPP(E5) -> SEA(E1, E2) -> RRU5 -> RRU4 -> RRU3.
Each RRU reverses the combined prior logits (1 - sigmoid) to attend to the
regions not yet claimed, gates the semantic features with that mask, joins
the edge features, and re-predicts. P3 is the designated final output.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .blocks import ConvBlock, collect_parameters
from .encoder import Encoder, EncoderConfig
from .tensor import (Tensor, add, bilinear_resize, concat_channels, mul,
                     one_minus, sigmoid, stack_channels)

ASPP_DILATIONS = (1, 6, 12, 18)
EDGE_CHANNELS = 64


@dataclass
class PredictionSet:
    """Logit maps from each stage plus the shared edge features.

    p_g and p_5 live at E5's resolution, p_4 at E4's, p_3 at E3's;
    p_e and f_e at E1's. All five logit maps are supervised.
    """

    p_g: Tensor
    p_5: Tensor
    p_4: Tensor
    p_3: Tensor
    p_e: Tensor
    f_e: Tensor


@dataclass
class NgesPriors:
    """The four re-calibration inputs of one RRU level.

    neighbour is the previous level's logit map and must be absent exactly
    at level 5; global_prior is the ASPP map; edge is the 64-channel SEA
    feature block; semantic is the encoder hierarchy E_i.
    """

    global_prior: Tensor
    edge: Tensor
    semantic: Tensor
    neighbour: Optional[Tensor] = None


class Aspp:
    """Four parallel dilated branches over E5, concatenated with E5 itself,
    mixed, and projected to a single-channel global prior logit map."""

    def __init__(self, in_ch, mid_ch, rng):
        self.branches = [
            ConvBlock(f"aspp.branch{d}", in_ch, mid_ch, rng, dilation=d)
            for d in ASPP_DILATIONS
        ]
        self.mix = ConvBlock("aspp.mix", in_ch + len(ASPP_DILATIONS) * mid_ch, mid_ch, rng)
        self.head = ConvBlock("aspp.head", mid_ch, 1, rng, ksize=1, apply_relu=False)

    def parameters(self):
        return collect_parameters(self.branches + [self.mix, self.head])

    def forward(self, e5):
        parts = [e5] + [branch(e5) for branch in self.branches]
        return self.head(self.mix(concat_channels(parts)))

    __call__ = forward


class Sea:
    """Selective edge aggregation over the two low-level hierarchies.

    Both inputs are reduced to 64 channels, gated by the multiplicative
    switcher w_s, residually re-combined, and fused into the edge feature
    block f_e; a 1-filter head emits the edge logit map p_e.
    """

    def __init__(self, c1, c2, rng):
        ch = EDGE_CHANNELS
        self.reduce1 = ConvBlock("sea.reduce1", c1, ch, rng)
        self.reduce2 = ConvBlock("sea.reduce2", c2, ch, rng)
        self.switch = ConvBlock("sea.switch", ch, ch, rng)
        self.res1 = ConvBlock("sea.res1", ch, ch, rng)
        self.res2 = ConvBlock("sea.res2", ch, ch, rng)
        self.fuse = ConvBlock("sea.fuse", 2 * ch, ch, rng)
        self.edge_head = ConvBlock("sea.edge_head", ch, 1, rng, apply_relu=False)
        self._blocks = (self.reduce1, self.reduce2, self.switch, self.res1,
                        self.res2, self.fuse, self.edge_head)

    def parameters(self):
        return collect_parameters(self._blocks)

    def forward(self, e1, e2):
        if e1.shape[2:] != e2.shape[2:]:
            raise ValueError(f"sea: E1 {e1.shape} and E2 {e2.shape} must share spatial size")
        r1 = self.reduce1(e1)
        r2 = self.reduce2(e2)
        w_s = self.switch(mul(r1, r2))
        f_e = self.fuse(concat_channels([self.res1(add(r1, w_s)), self.res2(add(r2, w_s))]))
        p_e = self.edge_head(f_e)
        return f_e, p_e

    __call__ = forward


class Rru:
    """One reversible re-calibration unit at level i in {3, 4, 5}."""

    def __init__(self, level, semantic_ch, rng):
        self.level = level
        self.semantic_ch = semantic_ch
        self.mix = ConvBlock(f"rru{level}.mix", EDGE_CHANNELS + semantic_ch, EDGE_CHANNELS, rng)
        self.head = ConvBlock(f"rru{level}.head", EDGE_CHANNELS, 1, rng, ksize=1, apply_relu=False)

    def parameters(self):
        return collect_parameters([self.mix, self.head])

    def _check_priors(self, priors):
        if self.level == 5 and priors.neighbour is not None:
            raise ValueError("rru level 5 takes no neighbour prior")
        if self.level < 5 and priors.neighbour is None:
            raise ValueError(f"rru level {self.level} requires a neighbour prior")

    def reverse_mask(self, priors, out_h, out_w):
        """Stacked reversal mask 1 - sigmoid(combined prior logits).

        Logits are resized to the semantic grid and, below level 5, the
        neighbour and global maps are added before the sigmoid.
        """
        self._check_priors(priors)
        combined = bilinear_resize(priors.global_prior, out_h, out_w)
        if priors.neighbour is not None:
            combined = add(bilinear_resize(priors.neighbour, out_h, out_w), combined)
        return stack_channels(one_minus(sigmoid(combined)), self.semantic_ch), combined

    def forward(self, e_i, priors):
        self._check_priors(priors)
        h, w = e_i.shape[2], e_i.shape[3]
        mask, _ = self.reverse_mask(priors, h, w)
        edge = bilinear_resize(priors.edge, h, w)
        return self.head(self.mix(concat_channels([edge, mul(mask, e_i)])))

    __call__ = forward


class ErrNet:
    """Encoder plus decoder graph; a deterministic function of (params, input)."""

    def __init__(self, encoder_config=None, aspp_mid_channels=64, seed=0):
        cfg = encoder_config or EncoderConfig()
        rng = np.random.default_rng(seed)
        c1, c2, c3, c4, c5 = cfg.channels
        self.encoder = Encoder(cfg, rng)
        self.aspp = Aspp(c5, aspp_mid_channels, rng)
        self.sea = Sea(c1, c2, rng)
        self.rru5 = Rru(5, c5, rng)
        self.rru4 = Rru(4, c4, rng)
        self.rru3 = Rru(3, c3, rng)

    def parameters(self):
        params = {}
        for part in (self.encoder, self.aspp, self.sea, self.rru5, self.rru4, self.rru3):
            params.update(part.parameters())
        return params

    def zero_grad(self):
        for p in self.parameters().values():
            p.zero_grad()

    def forward(self, image):
        feats = self.encoder(image)
        p_g = self.aspp(feats.e5)
        f_e, p_e = self.sea(feats.e1, feats.e2)
        p_5 = self.rru5(feats.e5, NgesPriors(global_prior=p_g, edge=f_e, semantic=feats.e5))
        p_4 = self.rru4(feats.e4, NgesPriors(global_prior=p_g, edge=f_e, semantic=feats.e4,
                                             neighbour=p_5))
        p_3 = self.rru3(feats.e3, NgesPriors(global_prior=p_g, edge=f_e, semantic=feats.e3,
                                             neighbour=p_4))
        return PredictionSet(p_g=p_g, p_5=p_5, p_4=p_4, p_3=p_3, p_e=p_e, f_e=f_e)

    __call__ = forward


def final_prediction(predictions, out_h, out_w):
    """Probability map in (0,1): sigmoid of P3 resized to the requested size."""
    if out_h < 1 or out_w < 1:
        raise ValueError(f"final_prediction: output size must be >= 1, got {out_h}x{out_w}")
    return sigmoid(bilinear_resize(predictions.p_3, out_h, out_w))
