"""Content completion and full-scene decomposition into RGBA layers.

A layer carries an object's completed RGB content on its amodal extent;
alpha equals the amodal mask exactly and visible pixels are copied from the
source image bit-for-bit. Background content is completed with the union of
all foreground modal masks as the fill region.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import masks as mk
from . import pngio


@dataclass
class ObjectLayer:
    object_id: int
    category_id: int
    amodal: np.ndarray
    rgba: np.ndarray  # (H, W, 4) uint8; alpha == amodal, RGB zero outside

    def translated(self, dy: int, dx: int) -> "ObjectLayer":
        from .training_data import translate_mask

        h, w = self.amodal.shape
        rgba = np.zeros_like(self.rgba)
        ys0, ys1 = max(0, dy), min(h, h + dy)
        xs0, xs1 = max(0, dx), min(w, w + dx)
        if ys0 < ys1 and xs0 < xs1:
            rgba[ys0:ys1, xs0:xs1] = self.rgba[ys0 - dy : ys1 - dy, xs0 - dx : xs1 - dx]
        return ObjectLayer(
            object_id=self.object_id,
            category_id=self.category_id,
            amodal=translate_mask(self.amodal, dy, dx),
            rgba=rgba,
        )


def eraser_region(am: np.ndarray, anc_union: np.ndarray) -> np.ndarray:
    """Hidden part of the object: amodal ∩ union of ancestors' modal masks."""
    return mk.intersect(am, anc_union)


def _layer_from_content(object_id, category_id, am, content) -> ObjectLayer:
    rgba = np.zeros((*am.shape, 4), dtype=np.uint8)
    rgba[..., :3][am] = content[am]
    rgba[..., 3] = am.astype(np.uint8) * 255
    return ObjectLayer(object_id=object_id, category_id=category_id, amodal=am.copy(), rgba=rgba)


def complete_content(content_completer, image, modal, am, object_id=0, category_id=0) -> ObjectLayer:
    """Fill the object's hidden pixels and assemble its RGBA layer.

    The fill region is am \\ modal: it equals eraser_region(am, anc_union)
    whenever the predicted amodal stays under the ancestor union, and also
    covers any predicted pixels beyond it. Visible pixels come from the
    source image untouched.
    """
    region = mk.diff(am, modal)
    erased = image.copy()
    erased[region] = 0
    filled = content_completer.fill(erased, region, modal) if region.any() else image
    content = image.copy()
    content[region] = filled[region]
    return _layer_from_content(object_id, category_id, am, content)


def complete_background(content_completer, image, modals) -> np.ndarray:
    """Background content: fill the union of all modal masks."""
    h, w = image.shape[:2]
    region = np.zeros((h, w), dtype=bool)
    for m in modals:
        region |= m
    if not region.any():
        return image.copy()
    guide = ~region
    erased = image.copy()
    erased[region] = 0
    return content_completer.fill(erased, region, guide)


def decompose_scene(image, modals, categories, amodal_masks, content_completer):
    """One completed RGBA layer per object plus the completed background."""
    layers = []
    for i, (modal, am) in enumerate(zip(modals, amodal_masks)):
        layers.append(
            complete_content(
                content_completer, image, modal, am, object_id=i, category_id=categories[i]
            )
        )
    background = complete_background(content_completer, image, modals)
    return layers, background


# ---------------------------------------------------------------------------
# Layer export
# ---------------------------------------------------------------------------


def export_layers(layers, background, directory) -> None:
    """RGBA PNG per layer + background PNG + JSON manifest."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = []
    for layer in layers:
        name = f"layer_{layer.object_id:03d}.png"
        (d / name).write_bytes(pngio.encode_png(layer.rgba))
        manifest.append(
            {"id": layer.object_id, "category": layer.category_id, "file": name}
        )
    (d / "background.png").write_bytes(pngio.encode_png(background))
    (d / "manifest.json").write_text(
        json.dumps({"layers": manifest, "background": "background.png"}, sort_keys=True, indent=2)
    )


def import_layers(directory):
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    layers = []
    for entry in manifest["layers"]:
        rgba = pngio.decode_png((d / entry["file"]).read_bytes())
        layers.append(
            ObjectLayer(
                object_id=entry["id"],
                category_id=entry["category"],
                amodal=rgba[..., 3] > 127,
                rgba=rgba,
            )
        )
    background = pngio.decode_png((d / manifest["background"]).read_bytes())
    return layers, background
