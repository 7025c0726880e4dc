"""Layered synthetic scenes with exact ground truth.

A scene stacks textured shapes on a flat background. Layering comes either
from unique global z indices or, for deliberately cyclic scenes, from an
explicit pairwise above-relation. Rendering yields per-object amodal masks,
modal (visible) masks, the image, and the ground-truth pairwise occlusion
matrix: order[i][j] = 1 means object i occludes object j.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import masks as mk
from . import pngio
from .errors import EmptyTargetError, SamplingExhaustedError, SceneSpecError
from .shapes import KINDS, NUM_CATEGORIES, ShapeSpec, paint, rasterize

SCENE_FORMAT_VERSION = 1


@dataclass
class SceneSpec:
    canvas: tuple  # (height, width)
    background: list  # flat RGB color
    shapes: list  # list[ShapeSpec]
    z_order: list | None = None  # unique z per shape; higher = nearer
    above_pairs: list | None = None  # [(i, j)] meaning shape i is above shape j

    def validate(self):
        n = len(self.shapes)
        if self.z_order is not None:
            if len(self.z_order) != n or len(set(self.z_order)) != n:
                raise SceneSpecError("z_order must assign a unique z to every shape")
        elif self.above_pairs is None:
            raise SceneSpecError("need z_order or above_pairs")

    def to_dict(self) -> dict:
        d = {
            "canvas": list(self.canvas),
            "background": list(self.background),
            "shapes": [s.to_dict() for s in self.shapes],
        }
        if self.z_order is not None:
            d["z_order"] = [int(z) for z in self.z_order]
        if self.above_pairs is not None:
            d["above_pairs"] = [[int(i), int(j)] for i, j in self.above_pairs]
        return d

    @staticmethod
    def from_dict(d: dict) -> "SceneSpec":
        return SceneSpec(
            canvas=tuple(d["canvas"]),
            background=list(d["background"]),
            shapes=[ShapeSpec.from_dict(s) for s in d["shapes"]],
            z_order=d.get("z_order"),
            above_pairs=[tuple(p) for p in d["above_pairs"]] if "above_pairs" in d else None,
        )


@dataclass
class SceneObject:
    id: int
    category_id: int
    amodal: np.ndarray
    modal: np.ndarray
    shape: ShapeSpec


@dataclass
class Scene:
    image: np.ndarray  # (H, W, 3) uint8
    objects: list  # list[SceneObject]
    gt_order: np.ndarray  # (n, n) int8, antisymmetric
    background: list  # flat RGB color
    spec: SceneSpec

    @property
    def canvas_shape(self):
        return self.image.shape[:2]

    @property
    def background_mask(self) -> np.ndarray:
        covered = np.zeros(self.canvas_shape, dtype=bool)
        for o in self.objects:
            covered |= o.modal
        return ~covered

    def background_render(self) -> np.ndarray:
        """Ground-truth background content (the flat fill everywhere)."""
        h, w = self.canvas_shape
        return np.tile(np.asarray(self.background, dtype=np.uint8), (h, w, 1))

    def layer_render(self, i: int) -> np.ndarray:
        """Ground-truth full-canvas texture of object i."""
        return paint(self.objects[i].shape, self.canvas_shape)


def _pair_relation(spec: SceneSpec, amodals) -> np.ndarray:
    """Antisymmetric above-relation matrix; +1 at [i, j] means i above j."""
    n = len(spec.shapes)
    rel = np.zeros((n, n), dtype=np.int8)
    if spec.z_order is not None:
        z = np.asarray(spec.z_order)
        rel = np.sign(z[:, None] - z[None, :]).astype(np.int8)
    else:
        for i, j in spec.above_pairs:
            if rel[i, j] == -1:
                raise SceneSpecError(f"contradictory above_pairs for ({i}, {j})")
            rel[i, j] = 1
            rel[j, i] = -1
        for i in range(n):
            for j in range(i + 1, n):
                if rel[i, j] == 0 and np.any(amodals[i] & amodals[j]):
                    raise SceneSpecError(
                        f"shapes {i} and {j} overlap but above_pairs leaves them unordered"
                    )
    return rel


def render_scene(spec: SceneSpec, neighbor_radius: int = 1) -> Scene:
    """Rasterize a SceneSpec into a Scene with exact ground truth.

    Per-pixel owner is the covering shape that is above every other covering
    shape; with explicit above_pairs a pixel may have no winner, which is a
    specification error.
    """
    spec.validate()
    h, w = spec.canvas
    n = len(spec.shapes)
    amodals = [rasterize(s, (h, w)) for s in spec.shapes]
    for i, a in enumerate(amodals):
        if not a.any():
            raise SceneSpecError(f"shape {i} rasterizes to an empty mask")
    rel = _pair_relation(spec, amodals)

    modals = []
    for i in range(n):
        covered_above = np.zeros((h, w), dtype=bool)
        for j in range(n):
            if rel[j, i] > 0:
                covered_above |= amodals[j]
        modals.append(amodals[i] & ~covered_above)

    # every covered pixel must have exactly one owner
    covered = np.zeros((h, w), dtype=bool)
    owned = np.zeros((h, w), dtype=np.int32)
    for i in range(n):
        covered |= amodals[i]
        owned += modals[i].astype(np.int32)
    if np.any(owned > 1):
        raise SceneSpecError("a pixel has two owners; above-relation is inconsistent")
    if np.any(covered & (owned == 0)):
        raise SceneSpecError("a covered pixel has no winner among its covering shapes")

    image = np.tile(np.asarray(spec.background, dtype=np.uint8), (h, w, 1))
    for i in range(n):
        tex = paint(spec.shapes[i], (h, w))
        image[modals[i]] = tex[modals[i]]

    gt = np.zeros((n, n), dtype=np.int8)
    for i in range(n):
        for j in range(i + 1, n):
            if not mk.are_neighbors(modals[i], modals[j], neighbor_radius):
                continue
            i_over_j = bool(np.any(modals[i] & amodals[j]))
            j_over_i = bool(np.any(modals[j] & amodals[i]))
            if i_over_j and j_over_i:
                raise SceneSpecError(f"objects {i} and {j} mutually occlude")
            if i_over_j:
                gt[i, j], gt[j, i] = 1, -1
            elif j_over_i:
                gt[i, j], gt[j, i] = -1, 1

    objects = [
        SceneObject(
            id=i,
            category_id=spec.shapes[i].category_id,
            amodal=amodals[i],
            modal=modals[i],
            shape=spec.shapes[i],
        )
        for i in range(n)
    ]
    return Scene(image=image, objects=objects, gt_order=gt, background=list(spec.background), spec=spec)


def occlusion_ratio(scene: Scene, i: int) -> float:
    """Hidden fraction of object i's amodal extent, in [0, 1]."""
    am = mk.area(scene.objects[i].amodal)
    if am == 0:
        raise EmptyTargetError(f"object {i} has an empty amodal mask")
    return 1.0 - mk.area(scene.objects[i].modal) / am


# ---------------------------------------------------------------------------
# Scene sampling
# ---------------------------------------------------------------------------


@dataclass
class SceneConfig:
    canvas: tuple = (96, 96)
    n_objects: tuple = (4, 8)  # inclusive range, or give a single int
    kinds: tuple = KINDS
    size_range: tuple = (14, 32)
    overlap_target: float = 0.3  # target mean per-object occlusion ratio
    texture: str = "mixed"  # flat | two_tone | mixed
    min_area: int = 25
    min_modal_area: int = 8
    constant_category: bool = False
    neighbor_radius: int = 1
    max_attempts: int = 80

    def n_range(self):
        if isinstance(self.n_objects, int):
            return self.n_objects, self.n_objects
        return self.n_objects


_PALETTE = [
    (220, 60, 60),
    (60, 160, 220),
    (70, 190, 90),
    (230, 180, 50),
    (170, 80, 200),
    (240, 130, 40),
    (90, 210, 200),
    (200, 90, 140),
    (130, 130, 240),
    (160, 200, 60),
]


def _sample_fill(rng, cfg: SceneConfig, color):
    two_tone = cfg.texture == "two_tone" or (cfg.texture == "mixed" and rng.random() < 0.5)
    if not two_tone:
        return {"style": "flat", "color": list(color)}
    c2 = tuple(int(np.clip(c + rng.integers(-70, 71), 0, 255)) for c in color)
    style = str(rng.choice(["stripes", "checker"]))
    fill = {"style": style, "colors": [list(color), list(c2)], "period": int(rng.integers(3, 7))}
    if style == "stripes":
        fill["axis"] = str(rng.choice(["h", "v", "d"]))
    return fill


def _sample_shape(rng, cfg: SceneConfig, kind, cx, cy, size) -> ShapeSpec:
    half = size / 2.0
    if kind == "rect":
        w = int(rng.integers(int(size * 0.6), int(size * 1.2) + 1))
        h = int(rng.integers(int(size * 0.6), int(size * 1.2) + 1))
        params = {"x": int(cx - w // 2), "y": int(cy - h // 2), "w": w, "h": h}
    elif kind == "circle":
        params = {"cx": int(cx), "cy": int(cy), "r": int(max(3, half))}
    elif kind == "triangle":
        angles = np.sort(rng.uniform(0, 2 * np.pi, size=3))
        radii = rng.uniform(0.7, 1.1, size=3) * half * 1.2
        pts = [[float(cx + r * np.cos(a)), float(cy + r * np.sin(a))] for a, r in zip(angles, radii)]
        params = {"pts": pts}
    elif kind == "convex":
        k = int(rng.integers(5, 8))
        angles = np.sort(rng.uniform(0, 2 * np.pi, size=k))
        radii = rng.uniform(0.75, 1.05, size=k) * half * 1.15
        pts = [[float(cx + r * np.cos(a)), float(cy + r * np.sin(a))] for a, r in zip(angles, radii)]
        params = {"pts": pts}
    elif kind == "lshape":
        w = int(rng.integers(int(size * 0.8), int(size * 1.3) + 1))
        h = int(rng.integers(int(size * 0.8), int(size * 1.3) + 1))
        params = {
            "x": int(cx - w // 2),
            "y": int(cy - h // 2),
            "w": w,
            "h": h,
            "notch_w": int(max(2, w * rng.uniform(0.35, 0.6))),
            "notch_h": int(max(2, h * rng.uniform(0.35, 0.6))),
            "corner": int(rng.integers(0, 4)),
        }
    else:
        raise ValueError(kind)
    return ShapeSpec(kind=kind, params=params, fill={}, category_id=0)


def sample_scene(rng_seed: int, config: SceneConfig | None = None) -> SceneSpec:
    """Draw a SceneSpec deterministically from a seed.

    Rejects and resamples whole scenes until every object keeps a visible
    mask of at least min_modal_area pixels, occlusion exists when
    overlap_target > 0, and the scene's mean occlusion ratio falls within
    [0.5, 1.5] x overlap_target.
    """
    cfg = config or SceneConfig()
    if not cfg.kinds:
        raise ValueError("config.kinds must be nonempty")
    rng = np.random.default_rng(rng_seed)
    h, w = cfg.canvas
    nmin, nmax = cfg.n_range()
    p_near = float(np.clip(0.35 + cfg.overlap_target, 0.0, 0.9)) if cfg.overlap_target > 0 else 0.0

    for _ in range(cfg.max_attempts):
        n = int(rng.integers(nmin, nmax + 1))
        background = list(_PALETTE[int(rng.integers(0, len(_PALETTE)))])
        background = [max(0, c - 140) + 20 for c in background]  # keep background dark
        colors = rng.permutation(len(_PALETTE))
        shapes = []
        centers = []
        for k in range(n):
            kind = str(rng.choice(cfg.kinds))
            size = float(rng.uniform(*cfg.size_range))
            margin = size / 2 + 2
            if centers and rng.random() < p_near:
                ax, ay, asize = centers[int(rng.integers(0, len(centers)))]
                reach = 0.75 * (size + asize) / 2
                cx = float(np.clip(ax + rng.uniform(-reach, reach), margin, w - margin))
                cy = float(np.clip(ay + rng.uniform(-reach, reach), margin, h - margin))
            else:
                cx = float(rng.uniform(margin, w - margin))
                cy = float(rng.uniform(margin, h - margin))
            shape = _sample_shape(rng, cfg, kind, cx, cy, size)
            shape.fill = _sample_fill(rng, cfg, _PALETTE[colors[k % len(_PALETTE)]])
            if cfg.constant_category:
                shape.category_id = 1
            shapes.append(shape)
            centers.append((cx, cy, size))
        z_order = [int(z) for z in rng.permutation(n)]
        spec = SceneSpec(canvas=(h, w), background=background, shapes=shapes, z_order=z_order)
        try:
            scene = render_scene(spec, cfg.neighbor_radius)
        except SceneSpecError:
            continue
        if any(mk.area(o.amodal) < cfg.min_area for o in scene.objects):
            continue
        if any(mk.area(o.modal) < cfg.min_modal_area for o in scene.objects):
            continue
        if cfg.overlap_target > 0:
            if not np.any(scene.gt_order != 0):
                continue
            ratios = [occlusion_ratio(scene, i) for i in range(n)]
            mean_occ = float(np.mean(ratios))
            if not (0.5 * cfg.overlap_target <= mean_occ <= 1.5 * cfg.overlap_target):
                continue
        return spec
    raise SamplingExhaustedError(
        f"no valid scene after {cfg.max_attempts} attempts (seed {rng_seed})"
    )


def make_two_square_scene() -> Scene:
    """Canonical two-square demo: A 4x4 at (0,0), B 4x4 at (2,0), B above A."""
    spec = SceneSpec(
        canvas=(8, 8),
        background=[10, 10, 10],
        shapes=[
            ShapeSpec("rect", {"x": 0, "y": 0, "w": 4, "h": 4}, {"style": "flat", "color": [200, 40, 40]}),
            ShapeSpec("rect", {"x": 2, "y": 0, "w": 4, "h": 4}, {"style": "flat", "color": [40, 120, 220]}),
        ],
        z_order=[0, 1],
    )
    return render_scene(spec)


def make_cyclic_scene(canvas: int = 64) -> Scene:
    """Four bars overlapped in a pinwheel: the order graph is a 4-cycle.

    Bar 0 (top) is above bar 1 (right), 1 above 2 (bottom), 2 above 3 (left),
    and 3 above 0, so no global z ordering exists.
    """
    c = canvas
    lo, hi, t = round(c * 0.15), round(c * 0.85), round(c * 0.14)
    bars = [
        {"x": lo, "y": lo, "w": hi - lo, "h": t},  # top
        {"x": hi - t, "y": lo, "w": t, "h": hi - lo},  # right
        {"x": lo, "y": hi - t, "w": hi - lo, "h": t},  # bottom
        {"x": lo, "y": lo, "w": t, "h": hi - lo},  # left
    ]
    colors = [[220, 70, 70], [70, 170, 220], [90, 200, 90], [230, 190, 60]]
    shapes = [
        ShapeSpec("rect", b, {"style": "flat", "color": col})
        for b, col in zip(bars, colors)
    ]
    spec = SceneSpec(
        canvas=(c, c),
        background=[15, 15, 20],
        shapes=shapes,
        above_pairs=[(0, 1), (1, 2), (2, 3), (3, 0)],
    )
    return render_scene(spec)


# ---------------------------------------------------------------------------
# Scene JSON serialization
# ---------------------------------------------------------------------------


def scene_to_dict(scene: Scene, predicted_amodal=None) -> dict:
    objs = []
    for o in scene.objects:
        entry = {
            "id": o.id,
            "category": o.category_id,
            "amodal_rle": mk.rle_encode(o.amodal),
            "modal_rle": mk.rle_encode(o.modal),
            "shape": o.shape.to_dict(),
        }
        if predicted_amodal is not None and o.id in predicted_amodal:
            entry["predicted_amodal_rle"] = mk.rle_encode(predicted_amodal[o.id])
        objs.append(entry)
    d = {
        "format_version": SCENE_FORMAT_VERSION,
        "canvas": [int(x) for x in scene.canvas_shape],
        "background": list(scene.background),
        "objects": objs,
        "gt_order": scene.gt_order.astype(int).tolist(),
        "image_png_base64": base64.b64encode(pngio.encode_png(scene.image)).decode("ascii"),
    }
    layering = {}
    if scene.spec.z_order is not None:
        layering["z_order"] = [int(z) for z in scene.spec.z_order]
    if scene.spec.above_pairs is not None:
        layering["above_pairs"] = [[int(i), int(j)] for i, j in scene.spec.above_pairs]
    d["layering"] = layering
    return d


def scene_from_dict(d: dict) -> Scene:
    canvas = tuple(d["canvas"])
    layering = d.get("layering", {})
    spec = SceneSpec(
        canvas=canvas,
        background=list(d["background"]),
        shapes=[ShapeSpec.from_dict(o["shape"]) for o in d["objects"]],
        z_order=layering.get("z_order"),
        above_pairs=[tuple(p) for p in layering["above_pairs"]] if "above_pairs" in layering else None,
    )
    image = pngio.decode_png(base64.b64decode(d["image_png_base64"]))
    objects = [
        SceneObject(
            id=o["id"],
            category_id=o["category"],
            amodal=mk.rle_decode(o["amodal_rle"]),
            modal=mk.rle_decode(o["modal_rle"]),
            shape=ShapeSpec.from_dict(o["shape"]),
        )
        for o in d["objects"]
    ]
    return Scene(
        image=image,
        objects=objects,
        gt_order=np.asarray(d["gt_order"], dtype=np.int8),
        background=list(d["background"]),
        spec=spec,
    )


def save_scene(scene: Scene, path, predicted_amodal=None) -> None:
    Path(path).write_text(
        json.dumps(scene_to_dict(scene, predicted_amodal), sort_keys=True, separators=(",", ":"))
    )


def load_scene(path) -> Scene:
    return scene_from_dict(json.loads(Path(path).read_text()))


def load_scene_dir(directory) -> list:
    """Load every scene_*.json in a directory, sorted by filename."""
    paths = sorted(Path(directory).glob("scene_*.json"))
    return [load_scene(p) for p in paths]
