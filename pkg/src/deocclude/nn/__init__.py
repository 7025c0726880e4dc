from .layers import Conv2d, ReLU, Upsample2x
from .loss import bce_with_logits, masked_l1
from .net import MiniUNet
from .train import SGDConfig, train_loop

__all__ = [
    "Conv2d",
    "ReLU",
    "Upsample2x",
    "MiniUNet",
    "SGDConfig",
    "bce_with_logits",
    "masked_l1",
    "train_loop",
]
