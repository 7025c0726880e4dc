"""Partial mask completers and content completers.

Every mask completer realizes one operation: given an object's visible mask
and a designated eraser region, return the mask extended by whatever of the
object plausibly hides under the eraser. All implementations except the
unrefined convex baseline honor the interface contract:

    output ⊇ target_modal          (visible pixels are never deleted)
    output \\ target_modal ⊆ eraser (new pixels appear only under the eraser)

Content completers fill RGB pixels inside a region, guided by the mask of
the object being painted.
"""

from __future__ import annotations

import numpy as np

from . import masks as mk
from .errors import LookupError_, NoBoundaryError
from .nn.loss import sigmoid
from .scenes import Scene
from .shapes import NUM_CATEGORIES
from .training_data import CropConfig


class PartialCompleter:
    """Interface: complete_mask(target_modal, eraser, context) -> mask."""

    contract_exempt = False

    def complete_mask(self, target_modal, eraser, context=None):
        raise NotImplementedError


class ContentCompleter:
    """Interface: fill(image, region, guide) -> image."""

    def fill(self, image, region, guide):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Oracle completer (ground truth)
# ---------------------------------------------------------------------------


def oracle_complete(scene: Scene, i: int, eraser: np.ndarray) -> np.ndarray:
    """Ideal partial completion: modal ∪ (amodal ∩ eraser)."""
    if i < 0 or i >= len(scene.objects):
        raise LookupError_(f"unknown object id {i}")
    o = scene.objects[i]
    return o.modal | (o.amodal & eraser)


class OracleCompleter(PartialCompleter):
    """Ground-truth completer; resolves the target object by exact modal match."""

    def __init__(self, scene: Scene):
        self.scene = scene
        self._by_modal = {o.modal.tobytes(): o.id for o in scene.objects}

    def _resolve(self, target_modal, context) -> int:
        if context and "object_id" in context:
            return context["object_id"]
        key = target_modal.tobytes()
        if key not in self._by_modal:
            raise LookupError_("target modal mask does not match any scene object")
        return self._by_modal[key]

    def complete_mask(self, target_modal, eraser, context=None):
        return oracle_complete(self.scene, self._resolve(target_modal, context), eraser)


# ---------------------------------------------------------------------------
# Convex-hull completer
# ---------------------------------------------------------------------------


def _monotone_chain(points):
    """Convex hull (counterclockwise) of integer (x, y) points."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def convex_hull_mask(m: np.ndarray) -> np.ndarray:
    """Rasterized convex hull of a mask's pixels (inclusive boundary)."""
    ys, xs = np.nonzero(m)
    if ys.size == 0:
        return m.copy()
    hull = _monotone_chain(list(zip(xs.tolist(), ys.tolist())))
    if len(hull) <= 2:
        return m.copy()
    y0, x0, y1, x1 = mk.bbox(m)
    sub_ys, sub_xs = np.mgrid[y0:y1, x0:x1]
    inside = np.ones(sub_ys.shape, dtype=bool)
    n = len(hull)
    for idx in range(n):
        ax, ay = hull[idx]
        bx, by = hull[(idx + 1) % n]
        cross = (bx - ax) * (sub_ys - ay) - (by - ay) * (sub_xs - ax)
        inside &= cross >= 0
    out = np.zeros_like(m)
    out[y0:y1, x0:x1] = inside
    return out | m


def convex_complete(target_modal, eraser, refined: bool = True) -> np.ndarray:
    """Convex-hull approximation of the amodal mask.

    refined: clip hull growth to the eraser so the completer contract holds.
    Unrefined output is the raw hull (baseline only; breaks the contract).
    """
    hull = convex_hull_mask(target_modal)
    if not refined:
        return hull
    return target_modal | (hull & eraser)


class ConvexCompleter(PartialCompleter):
    def __init__(self, refined: bool = True):
        self.refined = refined
        self.contract_exempt = not refined

    def complete_mask(self, target_modal, eraser, context=None):
        return convex_complete(target_modal, eraser, self.refined)


# ---------------------------------------------------------------------------
# Neural completer
# ---------------------------------------------------------------------------


class NeuralCompleter(PartialCompleter):
    """Trained mask net behind the completer contract.

    Crop -> forward -> sigmoid -> threshold -> paste back, then clamp the
    result to modal ∪ (raw ∩ eraser) so the contract holds unconditionally.
    """

    def __init__(self, net, crop_cfg: CropConfig = CropConfig(), threshold: float = 0.5,
                 num_categories: int = NUM_CATEGORIES):
        self.net = net
        self.crop_cfg = crop_cfg
        self.threshold = threshold
        self.num_categories = num_categories

    def complete_raw(self, target_modal, eraser, context=None) -> np.ndarray:
        """Unclamped thresholded prediction pasted onto the canvas."""
        category = (context or {}).get("category", 1)
        (inp, era), _, crop = mk.adaptive_crop(
            [target_modal, eraser],
            center_object=target_modal,
            enlarge_ratio=self.crop_cfg.enlarge_ratio,
            out_size=self.crop_cfg.out_size,
        )
        scale = np.float32(category / self.num_categories)
        x = np.stack(
            [inp.astype(np.float32), era.astype(np.float32), inp.astype(np.float32) * scale]
        )[None]
        logits = self.net.forward(x)
        prob = sigmoid(logits[0, 0])
        patch = prob > self.threshold
        return mk.paste_back(patch, crop, target_modal.shape)

    def complete_mask(self, target_modal, eraser, context=None):
        raw = self.complete_raw(target_modal, eraser, context)
        return target_modal | (raw & eraser)


# ---------------------------------------------------------------------------
# Content completers
# ---------------------------------------------------------------------------


class DiffusionFill(ContentCompleter):
    """Harmonic fill: Jacobi iterations of 4-neighbor averaging.

    Known pixels inside the guide act as fixed boundary sources; known pixels
    outside the guide are excluded from stencils (the fill prefers object
    colors over background colors). If no known guide pixel borders the
    region, all known neighbors are used instead.
    """

    def __init__(self, tol: float = 1e-3, max_iters: int = 500):
        self.tol = tol
        self.max_iters = max_iters

    def fill(self, image, region, guide):
        region = region.astype(bool)
        if not region.any():
            return image.copy()
        if region.all():
            raise NoBoundaryError("fill region covers the whole canvas")
        h, w = region.shape
        known = ~region
        sources = known & guide.astype(bool)
        if not (mk.dilate(region, 1) & sources).any():
            sources = known
        img = image.astype(np.float64)
        flat_input = img.ndim == 2
        if flat_input:
            img = img[..., None]

        def shifted(a, dy, dx):
            out = np.zeros_like(a)
            ys0, ys1 = max(0, dy), min(h, h + dy)
            xs0, xs1 = max(0, dx), min(w, w + dx)
            out[ys0:ys1, xs0:xs1] = a[ys0 - dy : ys1 - dy, xs0 - dx : xs1 - dx]
            return out

        # a region pixel averages over its region neighbors plus known guide
        # neighbors; known non-guide neighbors are excluded from the stencil
        usable = region | sources
        shifts = ((1, 0), (-1, 0), (0, 1), (0, -1))
        nb_masks = [shifted(usable, dy, dx) for dy, dx in shifts]
        weight = np.zeros((h, w))
        for nb in nb_masks:
            weight += nb
        weight_in = np.where(region & (weight > 0), weight, 1.0)

        out = img.copy()
        out[region] = img[sources].mean(axis=0)
        has_nb = (weight > 0)[region][:, None]
        for _ in range(self.max_iters):
            acc = np.zeros_like(img)
            for (dy, dx), nb in zip(shifts, nb_masks):
                acc += np.where(nb[..., None], shifted(out, dy, dx), 0.0)
            new_vals = np.where(has_nb, acc[region] / weight_in[region][:, None], out[region])
            delta = float(np.abs(new_vals - out[region]).max())
            out[region] = new_vals
            if delta < self.tol:
                break
        result = out[..., 0] if flat_input else out
        if image.dtype == np.uint8:
            return np.clip(np.rint(result), 0, 255).astype(np.uint8)
        return result.astype(image.dtype)


class OracleContent(ContentCompleter):
    """Ground-truth content: paints the matched object's true texture.

    The object is matched by its modal mask (the guide); the complement of
    all modal masks matches the background.
    """

    def __init__(self, scene: Scene):
        self.scene = scene
        self._by_modal = {o.modal.tobytes(): o.id for o in scene.objects}
        self._bg_key = scene.background_mask.tobytes()

    def fill(self, image, region, guide):
        key = guide.tobytes()
        if key in self._by_modal:
            truth = self.scene.layer_render(self._by_modal[key])
        elif key == self._bg_key:
            truth = self.scene.background_render()
        else:
            raise LookupError_("guide mask matches neither an object nor the background")
        out = image.copy()
        out[region.astype(bool)] = truth[region.astype(bool)]
        return out


class NeuralContent(ContentCompleter):
    """Trained content net: crop, predict, paste predicted pixels into region."""

    def __init__(self, net, crop_cfg: CropConfig = CropConfig()):
        self.net = net
        self.crop_cfg = crop_cfg

    def fill(self, image, region, guide):
        region = region.astype(bool)
        if not region.any():
            return image.copy()
        center = guide.astype(bool) | region
        (guide_c, region_c), image_c, crop = mk.adaptive_crop(
            [guide.astype(bool), region],
            center_object=center,
            enlarge_ratio=self.crop_cfg.enlarge_ratio,
            out_size=self.crop_cfg.out_size,
            image=image,
        )
        erased = image_c.astype(np.float32) / 255.0
        erased[region_c] = 0.0
        x = np.concatenate(
            [
                erased.transpose(2, 0, 1),
                guide_c.astype(np.float32)[None],
                region_c.astype(np.float32)[None],
            ]
        )[None]
        pred = self.net.forward(x)[0].transpose(1, 2, 0)
        pred8 = np.clip(np.rint(pred * 255.0), 0, 255).astype(np.uint8)
        patched = image_c.copy()
        patched[region_c] = pred8[region_c]
        pasted = crop.paste_image(patched, image)
        out = image.copy()
        out[region] = pasted[region]
        return out


# ---------------------------------------------------------------------------
# Config-driven construction
# ---------------------------------------------------------------------------


def make_completer(kind: str, scene: Scene | None = None, net=None, crop_cfg=CropConfig()):
    """Completer factory: oracle | convex | convex_r | neural."""
    if kind == "oracle":
        if scene is None:
            raise ValueError("oracle completer needs a scene")
        return OracleCompleter(scene)
    if kind == "convex":
        return ConvexCompleter(refined=False)
    if kind == "convex_r":
        return ConvexCompleter(refined=True)
    if kind == "neural":
        if net is None:
            raise ValueError("neural completer needs a trained net")
        return NeuralCompleter(net, crop_cfg)
    raise ValueError(f"unknown completer kind {kind!r}")


def make_content_completer(kind: str, scene: Scene | None = None, net=None, crop_cfg=CropConfig()):
    """Content factory: oracle_content | diffusion | neural_c."""
    if kind == "oracle_content":
        if scene is None:
            raise ValueError("oracle content completer needs a scene")
        return OracleContent(scene)
    if kind == "diffusion":
        return DiffusionFill()
    if kind == "neural_c":
        if net is None:
            raise ValueError("neural content completer needs a trained net")
        return NeuralContent(net, crop_cfg)
    raise ValueError(f"unknown content completer kind {kind!r}")
