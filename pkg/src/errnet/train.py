"""Seeded training loop over a synthetic dataset directory.

Each iteration draws one scale, jointly resizes the shuffled mini-batch,
runs forward/backward, and takes one Adam step; the loss CSV is flushed
per iteration so curves are inspectable mid-run.
"""

import os

import numpy as np

from . import tensor as T
from .checkpoint import load_into, save_checkpoint
from .encoder import EncoderConfig
from .losses import LEVEL_ORDER, total_loss
from .model import ErrNet
from .optim import adam_init, adam_step
from .synth import load_dataset, multiscale_batch

CSV_HEADER = "iter,total,edge," + ",".join(
    f"wbce_{lvl},wiou_{lvl}" for lvl in LEVEL_ORDER)


def build_model(cfg):
    return ErrNet(EncoderConfig(cfg.encoder_channels),
                  aspp_mid_channels=cfg.aspp_mid_channels, seed=cfg.seed)


def train(cfg, data_root, out_dir, iterations=None, init_ckpt=None, log=print):
    """Train and write <out_dir>/loss.csv plus <out_dir>/model.ckpt."""
    samples = load_dataset(data_root)
    if not samples:
        raise ValueError(f"dataset at {data_root} is empty")
    net = build_model(cfg)
    params = net.parameters()
    if init_ckpt:
        load_into(init_ckpt, params)
    state = adam_init(params)
    order_rng = np.random.default_rng([cfg.seed, 1])
    scale_rng = np.random.default_rng([cfg.seed, 2])

    per_epoch = (len(samples) + cfg.batch - 1) // cfg.batch
    total_iters = iterations if iterations is not None else cfg.epochs * per_epoch
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "loss.csv")
    ckpt_path = os.path.join(out_dir, "model.ckpt")

    it = 0
    with open(csv_path, "w") as csv:
        csv.write(CSV_HEADER + "\n")
        csv.flush()
        while it < total_iters:
            perm = order_rng.permutation(len(samples))
            for start in range(0, len(samples), cfg.batch):
                if it >= total_iters:
                    break
                batch = [samples[i] for i in perm[start:start + cfg.batch]]
                images, masks, edges = multiscale_batch(batch, cfg.scales, scale_rng)
                net.zero_grad()
                breakdown = total_loss(net(T.Tensor(images)), T.Tensor(masks), T.Tensor(edges))
                T.backward(breakdown.node)
                adam_step(params, state, cfg.lr)
                it += 1
                cells = [f"{it}", f"{breakdown.total:.10e}", f"{breakdown.edge:.10e}"]
                for lvl in LEVEL_ORDER:
                    wbce, wiou = breakdown.per_level[lvl]
                    cells += [f"{wbce:.10e}", f"{wiou:.10e}"]
                csv.write(",".join(cells) + "\n")
                csv.flush()
                if log and (it % 10 == 0 or it == total_iters):
                    log(f"iter {it}/{total_iters} total={breakdown.total:.4f}")
    save_checkpoint(ckpt_path, params)
    return ckpt_path, csv_path
