"""Co-supervision objective: weighted BCE + weighted IoU on every mask map
plus weighted BCE on the edge map.

Pixel weights follow the boundary-emphasis form 1 + 5*|avgpool31(g) - g|;
each map is a weight-normalized mean, maps are summed with unit
coefficients, and predictions are upsampled to ground-truth resolution
(never the reverse) so thin structures keep their supervision.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .tensor import (Tensor, add, add_scalar, avg_pool, bce_with_logits,
                     bilinear_resize, div, mul, mul_scalar, one_minus,
                     sigmoid, sub, sum_all)

LEVEL_ORDER = ("3", "4", "5", "g")


@dataclass
class LossBreakdown:
    """Float view of one loss evaluation plus the differentiable total node.

    total == edge + sum of per-level (wbce + wiou) pairs, folded in
    LEVEL_ORDER; all components are finite and non-negative.
    """

    total: float
    edge: float
    per_level: Dict[str, Tuple[float, float]]
    node: Tensor


def _check_binary(arr, name):
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ValueError(f"{name} must be binary (0/1 values only)")


def pixel_weight_map(g):
    """Boundary-emphasis weights 1 + 5*|avgpool(g, 31, stride 1, pad 15) - g|.

    Values lie in [1, 6]; the map carries no gradient.
    """
    _check_binary(g.data, "pixel_weight_map input")
    pooled = avg_pool(Tensor(g.data), kernel=31, stride=1, padding=15)
    return Tensor(1.0 + 5.0 * np.abs(pooled.data - g.data))


def weighted_bce(logits, g, w):
    """Weight-normalized mean of per-pixel stable BCE-with-logits."""
    per_pixel = bce_with_logits(logits, g)
    total = sum_all(mul(per_pixel, w))
    return mul_scalar(total, 1.0 / float(w.data.sum()))


def weighted_iou(logits, g, w):
    """1 - (sum w*p*g + 1) / (sum w*(p + g - p*g) + 1) with p = sigmoid(logits)."""
    if logits.shape != g.shape:
        raise ValueError(f"weighted_iou: shape mismatch {logits.shape} vs {g.shape}")
    p = sigmoid(logits)
    pg = mul(p, g)
    inter = sum_all(mul(w, pg))
    union = sum_all(mul(w, sub(add(p, g), pg)))
    return one_minus(div(add_scalar(inter, 1.0), add_scalar(union, 1.0)))


def total_loss(predictions, g_mask, g_edge):
    """Edge loss plus the four mask-level losses, each at GT resolution."""
    if g_mask.shape[2:] != g_edge.shape[2:]:
        raise ValueError(
            f"mask GT {g_mask.shape} and edge GT {g_edge.shape} must share resolution")
    _check_binary(g_mask.data, "g_mask")
    _check_binary(g_edge.data, "g_edge")
    h, w = g_mask.shape[2], g_mask.shape[3]
    w_mask = pixel_weight_map(g_mask)
    w_edge = pixel_weight_map(g_edge)

    edge_node = weighted_bce(bilinear_resize(predictions.p_e, h, w), g_edge, w_edge)
    total_node = edge_node
    per_level = {}
    level_maps = {"3": predictions.p_3, "4": predictions.p_4,
                  "5": predictions.p_5, "g": predictions.p_g}
    for level in LEVEL_ORDER:
        logits = bilinear_resize(level_maps[level], h, w)
        bce_node = weighted_bce(logits, g_mask, w_mask)
        iou_node = weighted_iou(logits, g_mask, w_mask)
        per_level[level] = (bce_node.item(), iou_node.item())
        total_node = add(total_node, add(bce_node, iou_node))

    return LossBreakdown(total=total_node.item(), edge=edge_node.item(),
                         per_level=per_level, node=total_node)
