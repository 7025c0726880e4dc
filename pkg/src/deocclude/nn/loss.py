"""Losses with analytic gradients w.r.t. the network output."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_with_logits(logits: np.ndarray, targets: np.ndarray):
    """Mean binary cross-entropy in stable log-sum-exp form.

    Returns (loss, dloss/dlogits); the gradient is (sigmoid(z) - t) / N.
    """
    if logits.shape != targets.shape:
        raise DimensionError(f"logits {logits.shape} vs targets {targets.shape}")
    z = logits
    t = targets
    loss = np.maximum(z, 0) - z * t + np.log1p(np.exp(-np.abs(z)))
    n = z.size
    grad = (sigmoid(z) - t) / n
    return float(loss.mean()), grad.astype(z.dtype)


def masked_l1(pred: np.ndarray, target: np.ndarray, mask: np.ndarray):
    """Mean absolute error restricted to mask (broadcast over channels).

    mask has shape (B, 1, H, W); the mean is over masked pixels x channels.
    An all-zero mask yields loss 0 with zero gradient.
    """
    if pred.shape != target.shape:
        raise DimensionError(f"pred {pred.shape} vs target {target.shape}")
    m = np.broadcast_to(mask, pred.shape)
    n = float(m.sum())
    if n == 0:
        return 0.0, np.zeros_like(pred)
    d = (pred - target) * m
    loss = np.abs(d).sum() / n
    grad = (np.sign(d) / n).astype(pred.dtype)
    return float(loss), grad
