"""Binary mask algebra, morphology and crop/resize primitives.

A mask is a 2-D numpy bool array of shape (height, width), row-major.
All operations are pure: inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyTargetError


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"mask shapes differ: {a.shape} vs {b.shape}")


def as_mask(a) -> np.ndarray:
    """Coerce array-like input to a 2-D bool mask."""
    m = np.asarray(a)
    if m.ndim != 2:
        raise DimensionError(f"mask must be 2-D, got shape {m.shape}")
    return m.astype(bool, copy=False)


def empty_mask(shape) -> np.ndarray:
    return np.zeros(shape, dtype=bool)


def union(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same_shape(a, b)
    return a | b


def intersect(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same_shape(a, b)
    return a & b


def diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pixels of a that are not in b."""
    _check_same_shape(a, b)
    return a & ~b


def area(m: np.ndarray) -> int:
    return int(np.count_nonzero(m))


def dilate(m: np.ndarray, radius: int = 1) -> np.ndarray:
    """Binary dilation with a 4-connected (cross) structuring element."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    out = m.astype(bool).copy()
    for _ in range(radius):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        out = grown
    return out


def are_neighbors(a: np.ndarray, b: np.ndarray, dilation_radius: int = 1) -> bool:
    """True iff dilating a by the given radius touches b."""
    _check_same_shape(a, b)
    return bool(np.any(dilate(a, dilation_radius) & b))


def bbox(m: np.ndarray):
    """Tight bounding box (y0, x0, y1, x1), exclusive upper bounds.

    Raises EmptyTargetError on an all-zero mask.
    """
    ys, xs = np.nonzero(m)
    if ys.size == 0:
        raise EmptyTargetError("bbox of empty mask")
    return int(ys.min()), int(xs.min()), int(ys.max()) + 1, int(xs.max()) + 1


# ---------------------------------------------------------------------------
# Square crop window + nearest/bilinear resampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CropTransform:
    """A square source window (may overhang the canvas) and an output size.

    The window starts at (y0, x0) on the canvas and spans `side` pixels in
    both directions; crops resample it to out_size x out_size. paste_back
    inverts the mapping, writing only inside the window.
    """

    y0: int
    x0: int
    side: int
    out_size: int

    def _src_index(self) -> np.ndarray:
        # nearest-neighbor source index for each output pixel (window coords)
        p = np.arange(self.out_size)
        idx = ((p + 0.5) * self.side / self.out_size).astype(np.int64)
        return np.minimum(idx, self.side - 1)

    def crop_mask(self, m: np.ndarray) -> np.ndarray:
        h, w = m.shape
        idx = self._src_index()
        ys = self.y0 + idx
        xs = self.x0 + idx
        yy = np.clip(ys, 0, h - 1)
        xx = np.clip(xs, 0, w - 1)
        patch = m[np.ix_(yy, xx)]
        valid_y = (ys >= 0) & (ys < h)
        valid_x = (xs >= 0) & (xs < w)
        return patch & valid_y[:, None] & valid_x[None, :]

    def crop_image(self, img: np.ndarray) -> np.ndarray:
        """Bilinear crop of an (H, W, C) float or uint8 image; overhang is black."""
        h, w = img.shape[:2]
        out = self.out_size
        p = np.arange(out)
        # continuous source coordinates in canvas space
        sy = self.y0 + (p + 0.5) * self.side / out - 0.5
        sx = self.x0 + (p + 0.5) * self.side / out - 0.5
        y0f = np.floor(sy)
        x0f = np.floor(sx)
        wy = (sy - y0f)[:, None]
        wx = (sx - x0f)[None, :]
        img_f = img.astype(np.float64)

        def gather(yi, xi):
            inside = ((yi >= 0) & (yi < h))[:, None] & ((xi >= 0) & (xi < w))[None, :]
            vals = img_f[np.clip(yi, 0, h - 1)[:, None], np.clip(xi, 0, w - 1)[None, :]]
            return vals * inside[..., None]

        yi0 = y0f.astype(np.int64)
        xi0 = x0f.astype(np.int64)
        acc = (
            gather(yi0, xi0) * (1 - wy)[..., None] * (1 - wx)[..., None]
            + gather(yi0, xi0 + 1) * (1 - wy)[..., None] * wx[..., None]
            + gather(yi0 + 1, xi0) * wy[..., None] * (1 - wx)[..., None]
            + gather(yi0 + 1, xi0 + 1) * wy[..., None] * wx[..., None]
        )
        if img.dtype == np.uint8:
            return np.clip(np.rint(acc), 0, 255).astype(np.uint8)
        return acc.astype(img.dtype)

    def _paste_index(self, canvas_len: int, origin: int):
        """Canvas rows/cols inside the window, and their patch indices."""
        lo = max(origin, 0)
        hi = min(origin + self.side, canvas_len)
        if lo >= hi:
            return np.arange(0), np.arange(0)
        c = np.arange(lo, hi)
        idx = ((c - origin + 0.5) * self.out_size / self.side).astype(np.int64)
        return c, np.minimum(idx, self.out_size - 1)

    def paste_mask(self, patch: np.ndarray, canvas_shape) -> np.ndarray:
        if patch.shape != (self.out_size, self.out_size):
            raise DimensionError(
                f"patch shape {patch.shape} != ({self.out_size}, {self.out_size})"
            )
        h, w = canvas_shape
        out = np.zeros((h, w), dtype=bool)
        ys, py = self._paste_index(h, self.y0)
        xs, px = self._paste_index(w, self.x0)
        if ys.size and xs.size:
            out[np.ix_(ys, xs)] = patch[np.ix_(py, px)]
        return out

    def paste_image(self, patch: np.ndarray, canvas: np.ndarray) -> np.ndarray:
        """Nearest-resample an image patch into a copy of canvas (window only)."""
        if patch.shape[:2] != (self.out_size, self.out_size):
            raise DimensionError(
                f"patch shape {patch.shape} != ({self.out_size}, {self.out_size})"
            )
        out = canvas.copy()
        ys, py = self._paste_index(canvas.shape[0], self.y0)
        xs, px = self._paste_index(canvas.shape[1], self.x0)
        if ys.size and xs.size:
            out[np.ix_(ys, xs)] = patch[np.ix_(py, px)]
        return out


def adaptive_crop(
    masks,
    center_object: np.ndarray,
    enlarge_ratio: float = 2.0,
    out_size: int = 64,
    image: np.ndarray | None = None,
):
    """Crop all masks (and optionally an image) through one shared square window.

    The window is centered on the bounding box of center_object with
    side = enlarge_ratio * max(bbox height, bbox width); regions outside the
    canvas read as empty/black. Returns (cropped_masks, cropped_image, transform).
    """
    if not np.any(center_object):
        raise EmptyTargetError("adaptive_crop needs a nonempty center object")
    y0, x0, y1, x1 = bbox(center_object)
    side = max(1, int(round(enlarge_ratio * max(y1 - y0, x1 - x0))))
    cy = (y0 + y1) / 2.0
    cx = (x0 + x1) / 2.0
    t = CropTransform(
        y0=int(round(cy - side / 2.0)),
        x0=int(round(cx - side / 2.0)),
        side=side,
        out_size=out_size,
    )
    cropped = [t.crop_mask(m) for m in masks]
    cropped_image = t.crop_image(image) if image is not None else None
    return cropped, cropped_image, t


def paste_back(patch: np.ndarray, t: CropTransform, canvas_shape) -> np.ndarray:
    """Write a mask patch back through its crop transform onto an empty canvas."""
    return t.paste_mask(patch, canvas_shape)


# ---------------------------------------------------------------------------
# Run-length encoding (row-major, counts alternate zeros/ones, zeros first)
# ---------------------------------------------------------------------------


def rle_encode(m: np.ndarray) -> dict:
    flat = m.astype(bool).ravel()
    n = flat.size
    if n == 0:
        return {"size": [0, 0], "counts": []}
    change = np.nonzero(np.diff(flat))[0] + 1
    bounds = np.concatenate([[0], change, [n]])
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts = [0] + counts
    return {"size": [int(m.shape[0]), int(m.shape[1])], "counts": counts}


def rle_decode(rle: dict) -> np.ndarray:
    h, w = rle["size"]
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    val = False
    for c in rle["counts"]:
        if val:
            flat[pos : pos + c] = True
        pos += c
        val = not val
    if pos != h * w:
        raise DimensionError(f"RLE counts sum to {pos}, expected {h * w}")
    return flat.reshape(h, w)
