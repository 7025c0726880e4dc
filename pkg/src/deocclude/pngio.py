"""PNG encode/decode helpers (deterministic output for identical pixels)."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image


def encode_png(arr: np.ndarray) -> bytes:
    """Encode an image array to PNG bytes.

    Accepts (H, W) bool/uint8 grayscale, (H, W, 3) RGB or (H, W, 4) RGBA.
    Bool masks become 0/255 grayscale.
    """
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    if arr.ndim == 2:
        img = Image.fromarray(arr, mode="L")
    elif arr.shape[2] == 3:
        img = Image.fromarray(arr, mode="RGB")
    elif arr.shape[2] == 4:
        img = Image.fromarray(arr, mode="RGBA")
    else:
        raise ValueError(f"unsupported image shape {arr.shape}")
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    return np.asarray(img)


def mask_to_png(mask: np.ndarray) -> bytes:
    return encode_png(mask.astype(bool))


def png_to_mask(data: bytes) -> np.ndarray:
    arr = decode_png(data)
    if arr.ndim == 3:
        arr = arr[..., 0]
    return arr > 127
