"""A small convolutional encoder-decoder with one skip connection.

Layout (all convs zero-padded):
    conv3x3(Cin->16) + ReLU          -> a1 (full res)
    conv3x3 stride2(16->32) + ReLU   -> a2 (half res)
    conv3x3(32->32) + ReLU           -> a3
    nearest-upsample x2              -> u  (full res)
    concat(u, a1)                    -> 48 channels
    conv3x3(48->16) + ReLU           -> a4
    conv1x1(16->Cout), zero-init     -> logits

The zero-initialized head makes an untrained net emit logits of exactly 0.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..errors import DimensionError
from .layers import Conv2d, ReLU, Upsample2x


class MiniUNet:
    def __init__(self, in_channels: int, out_channels: int = 1, init_seed: int = 0, dtype=np.float32):
        self.in_channels = in_channels
        self.out_channels = out_channels
        rng = np.random.default_rng(init_seed)
        self.enc1 = Conv2d(in_channels, 16, rng=rng, dtype=dtype)
        self.enc2 = Conv2d(16, 32, stride=2, rng=rng, dtype=dtype)
        self.mid = Conv2d(32, 32, rng=rng, dtype=dtype)
        self.dec1 = Conv2d(48, 16, rng=rng, dtype=dtype)
        self.head = Conv2d(16, out_channels, ksize=1, pad=0, zero_init=True, dtype=dtype)
        self.r1, self.r2, self.r3, self.r4 = ReLU(), ReLU(), ReLU(), ReLU()
        self.up = Upsample2x()

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Run the net on a (batch, channels, height, width) input."""
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise DimensionError(
                f"expected (B, {self.in_channels}, H, W) input, got {x.shape}"
            )
        if x.shape[2] % 2 or x.shape[3] % 2:
            raise DimensionError(f"spatial dims must be even, got {x.shape[2:]}")
        xc = np.ascontiguousarray(x.transpose(0, 2, 3, 1))  # layers are channel-last
        a1 = self.r1.forward(self.enc1.forward(xc))
        a2 = self.r2.forward(self.enc2.forward(a1))
        a3 = self.r3.forward(self.mid.forward(a2))
        u = self.up.forward(a3)
        cat = np.concatenate([u, a1], axis=3)
        a4 = self.r4.forward(self.dec1.forward(cat))
        logits = self.head.forward(a4)
        return np.ascontiguousarray(logits.transpose(0, 3, 1, 2))

    def backward(self, dlogits: np.ndarray, need_input_grad: bool = False):
        """Backprop through the cached forward; input grad only on request."""
        dl = np.ascontiguousarray(dlogits.transpose(0, 2, 3, 1))
        da4 = self.head.backward(dl)
        dcat = self.dec1.backward(self.r4.backward(da4))
        du, da1_skip = dcat[..., :32], dcat[..., 32:]
        da3 = self.up.backward(du)
        da2 = self.mid.backward(self.r3.backward(da3))
        da1 = self.enc2.backward(self.r2.backward(da2))
        dx = self.enc1.backward(self.r1.backward(da1 + da1_skip), need_input_grad)
        if dx is None:
            return None
        return np.ascontiguousarray(dx.transpose(0, 3, 1, 2))

    def conv_layers(self):
        return OrderedDict(
            [("enc1", self.enc1), ("enc2", self.enc2), ("mid", self.mid), ("dec1", self.dec1), ("head", self.head)]
        )

    def params(self) -> OrderedDict:
        out = OrderedDict()
        for name, layer in self.conv_layers().items():
            out[f"{name}.w"] = layer.w
            out[f"{name}.b"] = layer.b
        return out

    def grads(self) -> OrderedDict:
        out = OrderedDict()
        for name, layer in self.conv_layers().items():
            out[f"{name}.w"] = layer.dw
            out[f"{name}.b"] = layer.db
        return out

    def set_params(self, values: dict) -> None:
        for name, layer in self.conv_layers().items():
            layer.w = np.array(values[f"{name}.w"], dtype=layer.w.dtype).reshape(layer.w.shape)
            layer.b = np.array(values[f"{name}.b"], dtype=layer.b.dtype).reshape(layer.b.shape)

    def astype(self, dtype) -> "MiniUNet":
        for layer in self.conv_layers().values():
            layer.astype(dtype)
        return self

    def num_params(self) -> int:
        return sum(p.size for p in self.params().values())
