"""Checkpoint container: versioned JSON with base64 float32 parameter blobs.

Serialization is fully deterministic for identical parameters (no timestamps,
sorted keys), so repeated trainings with the same seed produce byte-identical
files.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .net import MiniUNet

CHECKPOINT_FORMAT_VERSION = 1


def save_checkpoint(path, net: MiniUNet, meta: dict | None = None) -> None:
    params = {}
    for name, arr in net.params().items():
        a = np.ascontiguousarray(arr, dtype=np.float32)
        params[name] = {
            "shape": list(a.shape),
            "dtype": "float32",
            "data": base64.b64encode(a.tobytes()).decode("ascii"),
        }
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "arch": {
            "kind": "mini_unet",
            "in_channels": net.in_channels,
            "out_channels": net.out_channels,
        },
        "params": params,
        "meta": meta or {},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")))


def load_checkpoint(path) -> tuple:
    """Load a checkpoint; returns (net, meta)."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('format_version')}")
    arch = doc["arch"]
    net = MiniUNet(arch["in_channels"], arch["out_channels"])
    values = {}
    for name, entry in doc["params"].items():
        raw = base64.b64decode(entry["data"])
        values[name] = np.frombuffer(raw, dtype=np.float32).reshape(entry["shape"]).copy()
    net.set_params(values)
    return net, doc.get("meta", {})
