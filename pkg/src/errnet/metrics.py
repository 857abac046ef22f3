"""Stand-alone evaluation of the four binary-segmentation metrics:
structure measure, mean enhanced-alignment measure, weighted F-measure,
and mean absolute error.

Everything here works on plain numpy maps (pred in [0,1], gt in {0,1}) and
is verified in the test suite against from-definition brute-force oracles,
not against any external toolbox binary.
"""

import concurrent.futures
import os
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from . import _kernels as K
from . import netpbm

EPS = 1e-8


@dataclass
class EvalPair:
    """One prediction/ground-truth pair; sizes equal, pred in [0,1], gt binary."""

    pred: np.ndarray
    gt: np.ndarray

    def __post_init__(self):
        self.pred = np.asarray(self.pred, dtype=np.float64)
        self.gt = np.asarray(self.gt, dtype=np.float64)
        if self.pred.ndim != 2 or self.gt.ndim != 2:
            raise ValueError("EvalPair expects 2-D maps")
        if self.pred.shape != self.gt.shape:
            raise ValueError(f"size mismatch: pred {self.pred.shape} vs gt {self.gt.shape}")
        if self.pred.min() < 0.0 or self.pred.max() > 1.0:
            raise ValueError("pred values must lie in [0, 1]")
        if not np.all((self.gt == 0.0) | (self.gt == 1.0)):
            raise ValueError("gt must be binary")


@dataclass
class MetricReport:
    rows: List[Tuple[str, float, float, float, float]] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)

    def means(self):
        if not self.rows:
            return None
        cols = np.array([[r[1], r[2], r[3], r[4]] for r in self.rows])
        m = cols.mean(axis=0)
        return {"s_alpha": m[0], "e_phi": m[1], "f_w_beta": m[2], "mae": m[3]}


def mae(pair):
    """Mean absolute per-pixel error."""
    return float(np.abs(pair.pred - pair.gt).mean())


def _object_score(values):
    # 2x / (x^2 + 1 + sigma_x); sample std, zero for fewer than 2 values.
    if values.size == 0:
        return 0.0
    x = values.mean()
    sigma = values.std(ddof=1) if values.size > 1 else 0.0
    return 2.0 * x / (x * x + 1.0 + sigma + EPS)


def _s_object(pred, gt):
    fg = gt > 0.5
    u = gt.mean()
    o_fg = _object_score(pred[fg])
    o_bg = _object_score((1.0 - pred)[~fg])
    return u * o_fg + (1.0 - u) * o_bg


def _centroid(gt):
    # 0-based rounded center of mass; image center for an empty map.
    h, w = gt.shape
    total = gt.sum()
    if total == 0:
        return h // 2, w // 2
    rows = np.arange(h, dtype=np.float64)
    cols = np.arange(w, dtype=np.float64)
    cy = int(np.round((gt.sum(axis=1) * rows).sum() / total))
    cx = int(np.round((gt.sum(axis=0) * cols).sum() / total))
    return cy, cx


def _ssim_block(pred, gt):
    n = pred.size
    if n == 0:
        return 0.0
    x = pred.mean()
    y = gt.mean()
    # constant blocks have exactly-zero deviations; computing them as
    # value - mean would leave rounding dust that flips the a == 0 branch
    dp = pred - x if pred.min() != pred.max() else np.zeros_like(pred)
    dg = gt - y if gt.min() != gt.max() else np.zeros_like(gt)
    if n > 1:
        sx = (dp * dp).sum() / (n - 1)
        sy = (dg * dg).sum() / (n - 1)
        sxy = (dp * dg).sum() / (n - 1)
    else:
        sx = sy = sxy = 0.0
    a = 4.0 * x * y * sxy
    b = (x * x + y * y) * (sx + sy)
    if a != 0.0:
        return a / (b + EPS)
    return 1.0 if b == 0.0 else 0.0


def _s_region(pred, gt):
    cy, cx = _centroid(gt)
    h, w = gt.shape
    area = h * w
    score = 0.0
    # quadrants split after the centroid pixel, weighted by area
    for rs, cs in ((slice(0, cy + 1), slice(0, cx + 1)),
                   (slice(0, cy + 1), slice(cx + 1, w)),
                   (slice(cy + 1, h), slice(0, cx + 1)),
                   (slice(cy + 1, h), slice(cx + 1, w))):
        block_gt = gt[rs, cs]
        if block_gt.size == 0:
            continue
        score += (block_gt.size / area) * _ssim_block(pred[rs, cs], block_gt)
    return score


def s_measure(pair, alpha=0.5):
    """alpha * object-aware + (1-alpha) * region-aware structural similarity.

    Degenerate ground truths: all-zero returns 1 - mean(pred), all-one
    returns mean(pred). Clamped to [0, 1].
    """
    pred, gt = pair.pred, pair.gt
    y = gt.mean()
    if y == 0.0:
        return float(np.clip(1.0 - pred.mean(), 0.0, 1.0))
    if y == 1.0:
        return float(np.clip(pred.mean(), 0.0, 1.0))
    s = alpha * _s_object(pred, gt) + (1.0 - alpha) * _s_region(pred, gt)
    return float(np.clip(s, 0.0, 1.0))


def e_measure_mean(pair):
    """Enhanced-alignment measure averaged over 256 uniform thresholds.

    Binarization is pred >= t; a constant gt gets +EPS added to its bias
    matrix to avoid 0/0.
    """
    pred, gt = pair.pred, pair.gt
    phi_g = gt - gt.mean()
    if gt.min() == gt.max():
        phi_g = phi_g + EPS
    gg = phi_g * phi_g
    total = 0.0
    for k in range(256):
        b = (pred >= k / 255.0).astype(np.float64)
        phi_p = b - b.mean()
        xi = 2.0 * phi_g * phi_p / (gg + phi_p * phi_p + EPS)
        total += ((1.0 + xi) ** 2 / 4.0).mean()
    return total / 256.0


GAUSS_SIZE = 7
GAUSS_SIGMA = 5.0


def _gauss_kernel():
    ax = np.arange(GAUSS_SIZE, dtype=np.float64) - (GAUSS_SIZE - 1) / 2.0
    k = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * GAUSS_SIGMA ** 2))
    return k / k.sum()


_GAUSS = _gauss_kernel()


def _gauss_filter(img):
    # 7x7 zero-padded correlation
    r = GAUSS_SIZE // 2
    padded = np.pad(img, r)
    out = np.zeros_like(img)
    for u in range(GAUSS_SIZE):
        for v in range(GAUSS_SIZE):
            out += _GAUSS[u, v] * padded[u:u + img.shape[0], v:v + img.shape[1]]
    return out


def weighted_f(pair, beta_sq=0.3):
    """Weighted F-measure with boundary-aware error weighting.

    Background errors are first replaced by the error at the nearest
    foreground pixel (ties: smallest column, then smallest row), the map is
    smoothed by a 7x7 Gaussian (sigma 5), and errors inside the ground
    truth take min(E, smoothed). Background pixels are then amplified by
    B = 2 - exp(ln(0.5)/5 * dist-to-foreground). Empty gt: 1.0 for an
    all-zero prediction, else 0.0.
    """
    pred, gt = pair.pred, pair.gt
    fg = gt > 0.5
    if not fg.any():
        return 1.0 if not np.any(pred > 0.0) else 0.0
    err = np.abs(pred - gt)
    b = np.ones_like(err)
    dependency = err
    if (~fg).any():
        dist_sq, near_r, near_c = K.edt_sq_indices(fg)
        dependency = err.copy()
        dependency[~fg] = err[near_r[~fg], near_c[~fg]]
        b[~fg] = 2.0 - np.exp(np.log(0.5) / 5.0 * np.sqrt(dist_sq[~fg]))
    smoothed = _gauss_filter(dependency)
    core = err.copy()
    inside = fg & (smoothed < err)
    core[inside] = smoothed[inside]
    ew = core * b
    tp = gt.sum() - ew[fg].sum()
    fp = ew[~fg].sum()
    recall = 1.0 - ew[fg].mean()
    precision = tp / (EPS + tp + fp)
    return float((1.0 + beta_sq) * precision * recall / (EPS + recall + beta_sq * precision))


def _evaluate_one(name, pred_path, gt_path):
    pred = netpbm.read_map(pred_path)
    gt = netpbm.read_map(gt_path)
    if pred.ndim == 3 or gt.ndim == 3:
        raise ValueError(f"{name}: expected single-channel maps")
    gt = (gt >= 0.5).astype(np.float64)
    pair = EvalPair(pred=pred, gt=gt)
    return (name, s_measure(pair), e_measure_mean(pair), weighted_f(pair), mae(pair))


def evaluate_folder(pred_dir, gt_dir):
    """Per-image metrics for matching filenames in two folders.

    Missing counterparts and per-file failures are recorded in
    report.errors; evaluation runs on up to ERRNET_THREADS workers and the
    report is sorted by filename either way.
    """
    pred_names = {f for f in os.listdir(pred_dir) if f.endswith(".pgm")}
    gt_names = {f for f in os.listdir(gt_dir) if f.endswith(".pgm")}
    report = MetricReport()
    for name in sorted(gt_names - pred_names):
        report.errors.append(f"{name}: missing prediction")
    for name in sorted(pred_names - gt_names):
        report.errors.append(f"{name}: missing ground truth")
    common = sorted(pred_names & gt_names)
    workers = max(1, int(os.environ.get("ERRNET_THREADS", "1")))
    results = {}
    if workers == 1 or len(common) <= 1:
        it = ((name, _run_one(name, pred_dir, gt_dir)) for name in common)
        for name, outcome in it:
            results[name] = outcome
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {name: pool.submit(_run_one, name, pred_dir, gt_dir) for name in common}
            for name, fut in futures.items():
                results[name] = fut.result()
    for name in common:
        ok, payload = results[name]
        if ok:
            report.rows.append(payload)
        else:
            report.errors.append(payload)
    return report


def _run_one(name, pred_dir, gt_dir):
    try:
        return True, _evaluate_one(name, os.path.join(pred_dir, name), os.path.join(gt_dir, name))
    except Exception as exc:
        return False, f"{name}: {exc}"


def report_to_csv(report):
    """CSV text: header, one row per image, MEAN row, 6 decimal places."""
    lines = ["file,s_alpha,e_phi,fw_beta,mae"]
    for name, s, e, f, m in report.rows:
        lines.append(f"{name},{s:.6f},{e:.6f},{f:.6f},{m:.6f}")
    means = report.means()
    if means is not None:
        lines.append(f"MEAN,{means['s_alpha']:.6f},{means['e_phi']:.6f},"
                     f"{means['f_w_beta']:.6f},{means['mae']:.6f}")
    return "\n".join(lines) + "\n"
