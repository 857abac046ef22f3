"""Deterministic synthetic camouflage data: multi-octave value-noise
backgrounds with one smooth blob whose fill is the same texture shifted in
mean by +-contrast, plus edge ground truth and on-disk dataset layout.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from . import netpbm

OCTAVE_CELLS = (4, 8, 16, 32)
NOISE_SPAN = 0.3          # texture occupies roughly 0.5 +- NOISE_SPAN
FG_FRACTION = (0.02, 0.60)
DEFAULT_SCALES = (0.75, 1.0, 1.25)


@dataclass
class SynthConfig:
    seed: int = 0
    count: int = 8
    size: int = 64
    contrast: float = 0.15

    def __post_init__(self):
        if self.size % 32:
            raise ValueError(f"size must be a multiple of 32, got {self.size}")
        if not 0.0 < self.contrast <= 0.5:
            raise ValueError(f"contrast must lie in (0, 0.5], got {self.contrast}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")


@dataclass
class Sample:
    image: np.ndarray   # (3, H, W) in [0, 1]
    mask: np.ndarray    # (1, H, W) binary
    edge: np.ndarray    # (1, H, W) binary
    id: str


def _value_noise(rng, size, cells):
    """Smooth noise in [-1, 1] from a bilinearly sampled random lattice."""
    lattice = rng.uniform(-1.0, 1.0, size=(cells + 1, cells + 1))
    pos = np.arange(size, dtype=np.float64) * (cells / size)
    i0 = np.floor(pos).astype(np.int64)
    t = pos - i0
    t = t * t * (3.0 - 2.0 * t)
    i1 = np.minimum(i0 + 1, cells)
    top = lattice[i0][:, i0] * (1 - t)[None, :] + lattice[i0][:, i1] * t[None, :]
    bot = lattice[i1][:, i0] * (1 - t)[None, :] + lattice[i1][:, i1] * t[None, :]
    return top * (1 - t)[:, None] + bot * t[:, None]


def _texture(rng, size):
    raw = np.zeros((size, size))
    amp_total = 0.0
    amp = 1.0
    for cells in OCTAVE_CELLS:
        raw += amp * _value_noise(rng, size, cells)
        amp_total += amp
        amp *= 0.5
    return 0.5 + NOISE_SPAN * raw / amp_total


def _blob_mask(rng, size):
    """One low-frequency perturbed ellipse with foreground fraction in bounds."""
    jj, ii = np.meshgrid(np.arange(size, dtype=np.float64),
                         np.arange(size, dtype=np.float64))
    while True:
        cx = rng.uniform(0.35, 0.65) * size
        cy = rng.uniform(0.35, 0.65) * size
        rx = rng.uniform(0.15, 0.30) * size
        ry = rng.uniform(0.15, 0.30) * size
        amps = rng.uniform(0.0, 0.15, size=3)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
        dx = (jj - cx) / rx
        dy = (ii - cy) / ry
        rho = np.sqrt(dx * dx + dy * dy)
        theta = np.arctan2(dy, dx)
        boundary = 1.0 + sum(a * np.cos((h + 2) * theta + p)
                             for h, (a, p) in enumerate(zip(amps, phases)))
        mask = (rho <= boundary).astype(np.float64)
        if FG_FRACTION[0] <= mask.mean() <= FG_FRACTION[1]:
            return mask


def edge_from_mask(mask):
    """Morphological gradient with a 3x3 square element: dilate - erode.

    Dilation pads with background, erosion with foreground, so a constant
    mask (all 0 or all 1) yields an empty edge.
    """
    mask = np.asarray(mask, dtype=np.float64)
    squeeze = mask.ndim == 3
    m = mask[0] if squeeze else mask
    if not np.all((m == 0.0) | (m == 1.0)):
        raise ValueError("edge_from_mask: mask must be binary")
    h, w = m.shape
    pad0 = np.pad(m, 1)
    pad1 = np.pad(m, 1, constant_values=1.0)
    dilated = np.maximum.reduce([pad0[u:u + h, v:v + w] for u in range(3) for v in range(3)])
    eroded = np.minimum.reduce([pad1[u:u + h, v:v + w] for u in range(3) for v in range(3)])
    edge = np.clip(dilated - eroded, 0.0, 1.0)
    return edge[None] if squeeze else edge


def synth_generate(cfg):
    """Deterministic list of Samples for a SynthConfig."""
    rng = np.random.default_rng(cfg.seed)
    samples = []
    for k in range(cfg.count):
        texture = _texture(rng, cfg.size)
        mask = _blob_mask(rng, cfg.size)
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        tint = rng.uniform(-0.04, 0.04, size=3)
        image = np.empty((3, cfg.size, cfg.size))
        fg = mask > 0.5
        for c in range(3):
            chan = np.clip(texture + tint[c], 0.0, 1.0)
            chan[fg] = np.clip(texture[fg] + tint[c] + sign * cfg.contrast, 0.0, 1.0)
            image[c] = chan
        samples.append(Sample(image=image, mask=mask[None],
                              edge=edge_from_mask(mask)[None], id=f"sample_{k:04d}"))
    return samples


def write_dataset(samples, root):
    """Layout: images/<id>.ppm, masks/<id>.pgm, edges/<id>.pgm, manifest.txt."""
    for sub in ("images", "masks", "edges"):
        os.makedirs(os.path.join(root, sub), exist_ok=True)
    for s in samples:
        netpbm.write_map(os.path.join(root, "images", f"{s.id}.ppm"), s.image)
        netpbm.write_map(os.path.join(root, "masks", f"{s.id}.pgm"), s.mask)
        netpbm.write_map(os.path.join(root, "edges", f"{s.id}.pgm"), s.edge)
    with open(os.path.join(root, "manifest.txt"), "w") as fh:
        for s in samples:
            fh.write(s.id + "\n")


def load_dataset(root):
    manifest = os.path.join(root, "manifest.txt")
    if not os.path.isfile(manifest):
        raise FileNotFoundError(f"no manifest.txt under {root}")
    with open(manifest) as fh:
        ids = [line.strip() for line in fh if line.strip()]
    samples = []
    for sid in ids:
        paths = {kind: os.path.join(root, sub, f"{sid}{ext}")
                 for kind, sub, ext in (("image", "images", ".ppm"),
                                        ("mask", "masks", ".pgm"),
                                        ("edge", "edges", ".pgm"))}
        for kind, path in paths.items():
            if not os.path.isfile(path):
                raise FileNotFoundError(f"dataset {kind} file missing: {path}")
        image = netpbm.read_map(paths["image"])
        mask = (netpbm.read_map(paths["mask"]) >= 0.5).astype(np.float64)[None]
        edge = (netpbm.read_map(paths["edge"]) >= 0.5).astype(np.float64)[None]
        samples.append(Sample(image=image, mask=mask, edge=edge, id=sid))
    return samples


def scale_size(size, scale):
    """Nearest multiple of 32 with half-down rounding (48 -> 32), min 32."""
    raw = size * scale
    if raw < 32.0:
        raise ValueError(f"scaled size {raw:g} is below the 32-pixel minimum")
    k = max(1, int(np.ceil(raw / 32.0 - 0.5)))
    return 32 * k


def _resize_plane(arr, out_h, out_w):
    return K.bilinear_forward(arr[None], out_h, out_w)[0]


def resample_sample(sample, new_size):
    """Jointly resize image/mask/edge; masks re-binarize at 0.5."""
    h = sample.image.shape[1]
    if new_size == h:
        return sample
    image = _resize_plane(sample.image, new_size, new_size)
    mask = (_resize_plane(sample.mask, new_size, new_size) >= 0.5).astype(np.float64)
    edge = (_resize_plane(sample.edge, new_size, new_size) >= 0.5).astype(np.float64)
    return Sample(image=image, mask=mask, edge=edge, id=sample.id)


def multiscale_batch(samples, scales, rng):
    """Draw one scale for the whole batch and return stacked arrays."""
    if not scales:
        raise ValueError("multiscale_batch: need at least one scale")
    if any(s <= 0 for s in scales):
        raise ValueError("multiscale_batch: scales must be positive")
    scale = scales[int(rng.integers(len(scales)))]
    size = scale_size(samples[0].image.shape[1], scale)
    resized = [resample_sample(s, size) for s in samples]
    return (np.stack([s.image for s in resized]),
            np.stack([s.mask for s in resized]),
            np.stack([s.edge for s in resized]))
