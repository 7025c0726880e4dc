"""Parametric 2D shapes: rasterization and texture painting.

Shapes live in canvas pixel coordinates. Rasterization is exact point-in-shape
testing on integer pixel positions, so a shape's mask is reproducible from its
spec alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("rect", "circle", "triangle", "convex", "lshape")

# category ids are assigned by kind, 1-based
KIND_CATEGORY = {kind: i + 1 for i, kind in enumerate(KINDS)}
NUM_CATEGORIES = len(KINDS)


@dataclass
class ShapeSpec:
    kind: str
    params: dict
    fill: dict
    category_id: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.category_id == 0:
            self.category_id = KIND_CATEGORY[self.kind]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "fill": self.fill,
            "category_id": self.category_id,
        }

    @staticmethod
    def from_dict(d: dict) -> "ShapeSpec":
        return ShapeSpec(
            kind=d["kind"],
            params=d["params"],
            fill=d["fill"],
            category_id=d.get("category_id", 0),
        )


def _pixel_grid(canvas_shape):
    h, w = canvas_shape
    ys, xs = np.mgrid[0:h, 0:w]
    return ys, xs


def _convex_inside(pts, ys, xs) -> np.ndarray:
    """Inside-or-on-boundary test for a convex polygon (vertices CCW)."""
    pts = np.asarray(pts, dtype=np.float64)
    # enforce counterclockwise orientation (y axis points down, so the sign
    # convention is fixed by the signed-area test below)
    area2 = 0.0
    for i in range(len(pts)):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % len(pts)]
        area2 += x1 * y2 - x2 * y1
    if area2 < 0:
        pts = pts[::-1]
    inside = np.ones(ys.shape, dtype=bool)
    for i in range(len(pts)):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % len(pts)]
        cross = (x2 - x1) * (ys - y1) - (y2 - y1) * (xs - x1)
        inside &= cross >= -1e-9
    return inside


def rasterize(shape: ShapeSpec, canvas_shape) -> np.ndarray:
    """Boolean mask of the shape's full extent on the canvas."""
    ys, xs = _pixel_grid(canvas_shape)
    p = shape.params
    if shape.kind == "rect":
        return (
            (xs >= p["x"])
            & (xs < p["x"] + p["w"])
            & (ys >= p["y"])
            & (ys < p["y"] + p["h"])
        )
    if shape.kind == "circle":
        return (xs - p["cx"]) ** 2 + (ys - p["cy"]) ** 2 <= p["r"] ** 2
    if shape.kind in ("triangle", "convex"):
        return _convex_inside(p["pts"], ys, xs)
    if shape.kind == "lshape":
        outer = (
            (xs >= p["x"])
            & (xs < p["x"] + p["w"])
            & (ys >= p["y"])
            & (ys < p["y"] + p["h"])
        )
        # notch removes one corner quadrant: 0=NE, 1=SE, 2=SW, 3=NW
        nw, nh = p["notch_w"], p["notch_h"]
        corner = p.get("corner", 0)
        if corner == 0:
            notch = (xs >= p["x"] + p["w"] - nw) & (ys < p["y"] + nh)
        elif corner == 1:
            notch = (xs >= p["x"] + p["w"] - nw) & (ys >= p["y"] + p["h"] - nh)
        elif corner == 2:
            notch = (xs < p["x"] + nw) & (ys >= p["y"] + p["h"] - nh)
        else:
            notch = (xs < p["x"] + nw) & (ys < p["y"] + nh)
        return outer & ~notch
    raise ValueError(f"unknown shape kind {shape.kind!r}")


def paint(shape: ShapeSpec, canvas_shape) -> np.ndarray:
    """Full-canvas uint8 RGB raster of the shape's fill pattern.

    The pattern covers the whole canvas; callers mask it with the shape's
    rasterized extent. Patterns are anchored to canvas coordinates so they
    are deterministic functions of the fill spec.
    """
    h, w = canvas_shape
    fill = shape.fill
    style = fill.get("style", "flat")
    if style == "flat":
        return np.tile(np.asarray(fill["color"], dtype=np.uint8), (h, w, 1))
    if style == "stripes":
        c0, c1 = (np.asarray(c, dtype=np.uint8) for c in fill["colors"])
        period = int(fill.get("period", 4))
        axis = fill.get("axis", "h")
        ys, xs = _pixel_grid(canvas_shape)
        if axis == "h":
            phase = ys // period
        elif axis == "v":
            phase = xs // period
        else:
            phase = (xs + ys) // period
        sel = (phase % 2).astype(bool)
        out = np.where(sel[..., None], c1[None, None, :], c0[None, None, :])
        return out.astype(np.uint8)
    if style == "checker":
        c0, c1 = (np.asarray(c, dtype=np.uint8) for c in fill["colors"])
        period = int(fill.get("period", 4))
        ys, xs = _pixel_grid(canvas_shape)
        sel = (((ys // period) + (xs // period)) % 2).astype(bool)
        out = np.where(sel[..., None], c1[None, None, :], c0[None, None, :])
        return out.astype(np.uint8)
    raise ValueError(f"unknown fill style {style!r}")
