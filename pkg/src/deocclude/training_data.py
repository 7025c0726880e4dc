"""Self-supervised training sample synthesis for the two partial completers.

Mask samples come in two flavors drawn by a Bernoulli switch:
  case 1: a surrogate occluder B erases part of the target A; the net must
          restore the erased pixels (input A\\B, eraser B, target A).
  case 2: the eraser B\\A only touches A without invading it; the net must
          leave A unchanged (input A, eraser B\\A, target A).
Content samples zero the image under A∩B and ask for the missing pixels,
guided by the remaining mask A\\B.

Every sample is reproducible from (pool, seed, sample index).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import masks as mk
from . import pngio
from .errors import EmptyTargetError, SamplingExhaustedError
from .scenes import Scene, load_scene_dir
from .shapes import NUM_CATEGORIES


@dataclass(frozen=True)
class CropConfig:
    enlarge_ratio: float = 2.0
    out_size: int = 64


@dataclass
class PoolItem:
    modal: np.ndarray
    category_id: int
    image: np.ndarray  # scene image the instance came from


class ObjectPool:
    """Flat pool of (modal mask, category, source image) drawn from scenes."""

    def __init__(self, items, canvas_shape, num_categories: int = NUM_CATEGORIES):
        if len(items) < 2:
            raise ValueError("object pool needs at least 2 instances")
        self.items = items
        self.canvas_shape = canvas_shape
        self.num_categories = num_categories

    @staticmethod
    def from_scenes(scenes_list) -> "ObjectPool":
        items = []
        canvas = None
        for sc in scenes_list:
            canvas = sc.canvas_shape
            for o in sc.objects:
                if o.modal.any():
                    items.append(PoolItem(o.modal, o.category_id, sc.image))
        return ObjectPool(items, canvas)

    @staticmethod
    def from_dir(directory) -> "ObjectPool":
        return ObjectPool.from_scenes(load_scene_dir(directory))

    def __len__(self):
        return len(self.items)


def translate_mask(m: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Shift a mask by integer offsets, clipping at the canvas edges."""
    h, w = m.shape
    out = np.zeros_like(m)
    ys0, ys1 = max(0, dy), min(h, h + dy)
    xs0, xs1 = max(0, dx), min(w, w + dx)
    if ys0 >= ys1 or xs0 >= xs1:
        return out
    out[ys0:ys1, xs0:xs1] = m[ys0 - dy : ys1 - dy, xs0 - dx : xs1 - dx]
    return out


def _bbox_center_extent(m):
    y0, x0, y1, x1 = mk.bbox(m)
    return (y0 + y1) / 2.0, (x0 + x1) / 2.0, y1 - y0, x1 - x0


def sample_eraser(
    pool: ObjectPool,
    rng: np.random.Generator,
    target: np.ndarray,
    mode: str,
    overlap_range=(0.1, 0.7),
    max_attempts: int = 60,
) -> np.ndarray:
    """Place another instance's modal mask as a surrogate occluder B.

    mode "overlap": |A∩B| / |A| must land in overlap_range (case-1 eraser).
    mode "adjacent": B\\A must be nonempty and touch A (case-2 eraser).
    """
    ta = mk.area(target)
    if ta == 0:
        raise EmptyTargetError("eraser sampling needs a nonempty target")
    acy, acx, ah, aw = _bbox_center_extent(target)
    for _ in range(max_attempts):
        item = pool.items[int(rng.integers(0, len(pool.items)))]
        b = item.modal
        bcy, bcx, bh, bw = _bbox_center_extent(b)
        if mode == "overlap":
            reach_y = (ah + bh) / 2.0
            reach_x = (aw + bw) / 2.0
            dy = int(round(acy - bcy + rng.uniform(-reach_y, reach_y)))
            dx = int(round(acx - bcx + rng.uniform(-reach_x, reach_x)))
            placed = translate_mask(b, dy, dx)
            frac = mk.area(placed & target) / ta
            if overlap_range[0] <= frac <= overlap_range[1]:
                return placed
        elif mode == "adjacent":
            ang = rng.uniform(0, 2 * np.pi)
            dist = rng.uniform(0.5, 1.1) * (max(ah, aw) + max(bh, bw)) / 2.0
            dy = int(round(acy - bcy + dist * np.sin(ang)))
            dx = int(round(acx - bcx + dist * np.cos(ang)))
            placed = translate_mask(b, dy, dx)
            outside = placed & ~target
            if outside.any() and mk.are_neighbors(target, outside, 1):
                return placed
        else:
            raise ValueError(f"unknown eraser mode {mode!r}")
    raise SamplingExhaustedError(f"no valid {mode} eraser after {max_attempts} attempts")


# ---------------------------------------------------------------------------
# PCNet-M style mask samples
# ---------------------------------------------------------------------------


@dataclass
class TrainSampleM:
    input_mask: np.ndarray
    eraser_mask: np.ndarray
    category_channel: np.ndarray  # float32, input mask scaled by category/K
    target_mask: np.ndarray
    case: int  # 1 or 2
    crop: mk.CropTransform


def make_mask_sample(
    pool: ObjectPool,
    rng: np.random.Generator,
    gamma: float = 0.8,
    crop_cfg: CropConfig = CropConfig(),
    index: int | None = None,
) -> TrainSampleM:
    """Build one mask-completion sample; the case is Bernoulli(gamma)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if index is None:
        index = int(rng.integers(0, len(pool.items)))
    item = pool.items[index]
    a = item.modal
    case = 1 if rng.random() < gamma else 2
    if case == 1:
        b = sample_eraser(pool, rng, a, "overlap")
        input_full = a & ~b
        eraser_full = b
    else:
        b = sample_eraser(pool, rng, a, "adjacent")
        input_full = a
        eraser_full = b & ~a
    (input_c, eraser_c, target_c), _, crop = mk.adaptive_crop(
        [input_full, eraser_full, a],
        center_object=a,
        enlarge_ratio=crop_cfg.enlarge_ratio,
        out_size=crop_cfg.out_size,
    )
    scale = item.category_id / pool.num_categories
    return TrainSampleM(
        input_mask=input_c,
        eraser_mask=eraser_c,
        category_channel=input_c.astype(np.float32) * np.float32(scale),
        target_mask=target_c,
        case=case,
        crop=crop,
    )


def mask_batch(samples) -> tuple:
    """Stack mask samples into net input (B,3,s,s) and target (B,1,s,s)."""
    x = np.stack(
        [
            np.stack(
                [
                    s.input_mask.astype(np.float32),
                    s.eraser_mask.astype(np.float32),
                    s.category_channel,
                ]
            )
            for s in samples
        ]
    )
    t = np.stack([s.target_mask.astype(np.float32)[None] for s in samples])
    case1_frac = float(np.mean([s.case == 1 for s in samples]))
    return x, t, case1_frac


def mask_sample_stream(pool: ObjectPool, seed: int, gamma: float, crop_cfg: CropConfig):
    """Infinite deterministic stream; sample i depends only on (pool, seed, i)."""
    i = 0
    while True:
        rng = np.random.default_rng((seed, i))
        yield make_mask_sample(pool, rng, gamma, crop_cfg)
        i += 1


# ---------------------------------------------------------------------------
# PCNet-C style content samples
# ---------------------------------------------------------------------------


@dataclass
class TrainSampleC:
    erased_image: np.ndarray  # (s, s, 3) float32 in [0,1], eraser region zeroed
    guide_mask: np.ndarray  # A \ B
    eraser_region: np.ndarray  # A ∩ B
    target_image: np.ndarray  # (s, s, 3) float32 in [0,1]
    crop: mk.CropTransform


def make_content_sample(
    pool: ObjectPool,
    rng: np.random.Generator,
    crop_cfg: CropConfig = CropConfig(),
    index: int | None = None,
) -> TrainSampleC:
    if index is None:
        index = int(rng.integers(0, len(pool.items)))
    item = pool.items[index]
    a = item.modal
    b = sample_eraser(pool, rng, a, "overlap")
    region_full = a & b
    if not region_full.any():
        raise EmptyTargetError("content sample needs a nonempty eraser region")
    guide_full = a & ~b
    (guide_c, region_c), image_c, crop = mk.adaptive_crop(
        [guide_full, region_full],
        center_object=a,
        enlarge_ratio=crop_cfg.enlarge_ratio,
        out_size=crop_cfg.out_size,
        image=item.image,
    )
    target = image_c.astype(np.float32) / 255.0
    erased = target.copy()
    erased[region_c] = 0.0
    return TrainSampleC(
        erased_image=erased,
        guide_mask=guide_c,
        eraser_region=region_c,
        target_image=target,
        crop=crop,
    )


def content_batch(samples) -> tuple:
    """Stack content samples into (B,5,s,s) input, (B,3,s,s) target, (B,1,s,s) region."""
    xs, ts, rs = [], [], []
    for s in samples:
        img = s.erased_image.transpose(2, 0, 1)
        x = np.concatenate(
            [img, s.guide_mask.astype(np.float32)[None], s.eraser_region.astype(np.float32)[None]]
        )
        xs.append(x)
        ts.append(s.target_image.transpose(2, 0, 1))
        rs.append(s.eraser_region.astype(np.float32)[None])
    return np.stack(xs), np.stack(ts), np.stack(rs)


def content_sample_stream(pool: ObjectPool, seed: int, crop_cfg: CropConfig):
    i = 0
    while True:
        rng = np.random.default_rng((seed, i))
        yield make_content_sample(pool, rng, crop_cfg)
        i += 1


def dump_mask_sample(sample: TrainSampleM, directory) -> None:
    """Write one sample as PNG channels + JSON metadata, for visual audit."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "input.png").write_bytes(pngio.mask_to_png(sample.input_mask))
    (d / "eraser.png").write_bytes(pngio.mask_to_png(sample.eraser_mask))
    (d / "target.png").write_bytes(pngio.mask_to_png(sample.target_mask))
    meta = {
        "case": sample.case,
        "crop": {
            "y0": sample.crop.y0,
            "x0": sample.crop.x0,
            "side": sample.crop.side,
            "out_size": sample.crop.out_size,
        },
    }
    (d / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2))
