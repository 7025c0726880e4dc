"""SGD-with-momentum training loops for the two completers.

Training is single-threaded and deterministic given the config seed: the
sample stream derives each sample from (seed, sample index), so loss
histories and final weights are bit-reproducible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import TrainingDivergedError
from ..training_data import (
    CropConfig,
    ObjectPool,
    content_batch,
    make_content_sample,
    make_mask_sample,
    mask_batch,
)
from .loss import bce_with_logits, masked_l1
from .net import MiniUNet


@dataclass
class SGDConfig:
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 16
    iters: int = 3000
    seed: int = 0
    # learning rate is multiplied by lr_decay_factor at each fraction of iters
    lr_decay_at: tuple = (0.6, 0.85)
    lr_decay_factor: float = 0.1

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def lr_at(self, iteration: int) -> float:
        lr = self.lr
        for frac in self.lr_decay_at:
            if iteration >= int(frac * self.iters):
                lr *= self.lr_decay_factor
        return lr


class SGD:
    def __init__(self, net: MiniUNet, cfg: SGDConfig):
        self.net = net
        self.cfg = cfg
        self.velocity = {k: np.zeros_like(v) for k, v in net.params().items()}

    def step(self, iteration: int) -> None:
        lr = self.cfg.lr_at(iteration)
        params = self.net.params()
        grads = self.net.grads()
        for k, p in params.items():
            v = self.velocity[k]
            v *= self.cfg.momentum
            v -= lr * grads[k]
            p += v


def train_loop(net: MiniUNet, batch_fn, loss_fn, cfg: SGDConfig, log_every: int = 0):
    """Generic loop: batch_fn(it) -> (x, target, aux); loss_fn -> (loss, dout).

    Returns a history of (iteration, loss, aux) rows. Raises
    TrainingDivergedError when the loss stops being finite.
    """
    opt = SGD(net, cfg)
    history = []
    for it in range(cfg.iters):
        x, target, aux = batch_fn(it)
        logits = net.forward(x)
        loss, dlogits = loss_fn(logits, target)
        if not np.isfinite(loss):
            raise TrainingDivergedError(it)
        net.backward(dlogits)
        opt.step(it)
        history.append((it, loss, aux))
        if log_every and (it + 1) % log_every == 0:
            recent = [h[1] for h in history[-log_every:]]
            print(f"iter {it + 1}/{cfg.iters}  loss {np.mean(recent):.4f}")
    return history


def train_mask_net(
    pool: ObjectPool,
    cfg: SGDConfig,
    gamma: float = 0.8,
    crop_cfg: CropConfig = CropConfig(),
    net: MiniUNet | None = None,
    log_every: int = 0,
):
    """Train the mask completer on the Bernoulli(gamma) case mixture."""
    if net is None:
        net = MiniUNet(in_channels=3, out_channels=1, init_seed=cfg.seed)

    def batch_fn(it):
        samples = []
        for b in range(cfg.batch_size):
            rng = np.random.default_rng((cfg.seed, it * cfg.batch_size + b))
            samples.append(make_mask_sample(pool, rng, gamma, crop_cfg))
        return mask_batch(samples)

    history = train_loop(net, batch_fn, bce_with_logits, cfg, log_every)
    return net, history


def train_content_net(
    pool: ObjectPool,
    cfg: SGDConfig,
    crop_cfg: CropConfig = CropConfig(),
    net: MiniUNet | None = None,
    log_every: int = 0,
):
    """Train the content completer with L1 loss over the erased region."""
    if net is None:
        net = MiniUNet(in_channels=5, out_channels=3, init_seed=cfg.seed)

    region_holder = {}

    def batch_fn(it):
        samples = []
        for b in range(cfg.batch_size):
            rng = np.random.default_rng((cfg.seed, it * cfg.batch_size + b))
            samples.append(make_content_sample(pool, rng, crop_cfg))
        x, t, region = content_batch(samples)
        region_holder["mask"] = region
        return x, t, 0.0

    def loss_fn(pred, target):
        return masked_l1(pred, target, region_holder["mask"])

    history = train_loop(net, batch_fn, loss_fn, cfg, log_every)
    return net, history


def history_to_csv(history, path) -> None:
    """Write loss history as CSV rows (iteration, loss, case1_frac)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["iteration", "loss", "case1_frac"])
        for it, loss, aux in history:
            writer.writerow([it, f"{loss:.8f}", f"{aux:.4f}"])
