"""Seeded synthetic scenes and noisy multi-scale patch predictions.

Scenes are axis-aligned rectangles painted far-to-near, so nearer instances
occlude farther ones. Depth rank follows the image vertical: a lower bottom
edge means nearer. Each patch only sees the instances intersecting it and
numbers them 1..k locally, which is why a patch's label never exceeds the
global one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .components import label_same_value
from .core import DEFAULT_N_MAX, LabelMap, ProbTensor, Rect
from .layout import LayoutConfig, tile_patches
from .merging import PATCH_LEVELS, PatchPrediction
from .postprocess import DEFAULT_MIN_SIZE, postprocess

_LOGIT_FLOOR = 1e-3


class TooManyInstances(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    label_flip_prob: float = 0.0
    blur_radius: int = 0
    prob_temperature: float = 1.0
    downsample: int = 1  # 8 mimics the coarse CNN output

    def __post_init__(self):
        if not 0.0 <= self.label_flip_prob <= 1.0:
            raise ValueError("label_flip_prob must lie in [0, 1]")
        if self.blur_radius < 0:
            raise ValueError("blur_radius must be >= 0")
        if not self.prob_temperature > 0:
            raise ValueError("prob_temperature must be > 0")
        if self.downsample < 1:
            raise ValueError("downsample must be >= 1")


@dataclass(frozen=True)
class SceneSpec:
    image_w: int = 192
    image_h: int = 128
    n_instances: int = 3
    horizon_y: int = 40
    seed: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    min_visible: int = DEFAULT_MIN_SIZE + 50
    max_attempts: int = 2000

    def __post_init__(self):
        if self.n_instances < 0:
            raise ValueError("n_instances must be >= 0")
        if self.n_instances > DEFAULT_N_MAX:
            raise TooManyInstances(f"n_instances={self.n_instances} exceeds {DEFAULT_N_MAX}")
        if not 0 <= self.horizon_y < self.image_h:
            raise ValueError("horizon_y must lie inside the image")

    def layout(self, **overrides) -> LayoutConfig:
        return LayoutConfig(self.image_w, self.image_h, self.horizon_y, **overrides)


@dataclass(frozen=True)
class Scene:
    gt: LabelMap
    rects: tuple  # Rect per depth rank, nearest first


def _sample_rects(spec: SceneSpec, rng: np.random.Generator) -> list[Rect]:
    W, H, hz = spec.image_w, spec.image_h, spec.horizon_y
    depth = H - hz
    rects = []
    for _ in range(spec.n_instances):
        bottom = int(rng.integers(hz + max(4, depth // 6), H + 1))
        # perspective: things lower in the image are larger
        scale = (bottom - hz) / depth
        h = int(np.clip(rng.normal(0.55, 0.1) * scale * depth, 12, bottom - hz))
        w = int(np.clip(h * rng.uniform(1.0, 2.2), 12, W))
        x0 = int(rng.integers(0, W - w + 1))
        rects.append(Rect(x0, bottom - h, w, h))
    rects.sort(key=lambda r: -r.y1)
    return rects


def _paint(rects: list[Rect], W: int, H: int) -> np.ndarray:
    lab = np.zeros((H, W), dtype=np.int32)
    for rank in range(len(rects), 0, -1):
        lab[rects[rank - 1].slices] = rank
    return lab


def _valid(lab: np.ndarray, rects: list[Rect], spec: SceneSpec) -> bool:
    n = len(rects)
    if len({r.y1 for r in rects}) != n:
        return False
    comp, k = label_same_value(lab)
    if k != n:
        return False  # an instance is hidden or split by an occluder
    if np.bincount(lab.ravel(), minlength=n + 1)[1:].min(initial=spec.min_visible) < spec.min_visible:
        return False
    bottoms, centers = [], []
    for rank in range(1, n + 1):
        ys, xs = np.nonzero(lab == rank)
        bottoms.append(ys.max())
        centers.append((ys.min() + ys.max()) / 2)
    if np.any(np.diff(bottoms) >= 0) or np.any(np.diff(centers) >= 0):
        return False
    m = LabelMap(lab)
    return postprocess(m) == m


def generate_scene(spec: SceneSpec) -> Scene:
    """Ground truth with depth ranks as labels, consistent with the vertical heuristic.

    Rejection-samples until every instance is one visible 4-connected piece of
    at least ``min_visible`` pixels and both bbox-bottom and bbox-center rows
    decrease strictly with depth.
    """
    rng = np.random.default_rng(spec.seed)
    W, H = spec.image_w, spec.image_h
    for _ in range(spec.max_attempts):
        rects = _sample_rects(spec, rng)
        lab = _paint(rects, W, H)
        if _valid(lab, rects, spec):
            return Scene(LabelMap(lab), tuple(rects))
    raise RuntimeError(f"no valid scene with {spec.n_instances} instances after {spec.max_attempts} tries")


def local_ranks(crop: np.ndarray, levels: int = PATCH_LEVELS) -> np.ndarray:
    """Renumber the global labels present in ``crop`` to 1..k, order kept, capped at levels-1."""
    present = np.unique(crop[crop > 0])
    table = np.zeros(int(crop.max(initial=0)) + 1, dtype=np.int32)
    table[present] = np.minimum(np.arange(1, present.size + 1), levels - 1)
    return table[crop]


def _downsample(p: np.ndarray, d: int) -> np.ndarray:
    h, w, L = p.shape
    hh, ww = -(-h // d), -(-w // d)
    padded = np.pad(p, ((0, hh * d - h), (0, ww * d - w), (0, 0)), mode="edge")
    return padded.reshape(hh, d, ww, d, L).mean(axis=(1, 3))


def corrupt_to_patches(gt: LabelMap, layout: LayoutConfig, noise: NoiseSpec = NoiseSpec(),
                       seed: int = 0, levels: int = PATCH_LEVELS) -> list[PatchPrediction]:
    """Emulated patch outputs: crop, local re-rank, one-hot, flip, blur, soften, downsample."""
    out = []
    for z, spec in enumerate(tile_patches(layout)):
        rng = np.random.default_rng([seed, z])
        loc = local_ranks(gt.labels[spec.rect.slices], levels)
        if noise.label_flip_prob > 0:
            flip = rng.random(loc.shape) < noise.label_flip_prob
            shift = rng.integers(1, levels, size=loc.shape)
            loc = np.where(flip, (loc + shift) % levels, loc)
        p = np.eye(levels)[loc]
        if noise.blur_radius > 0:
            p = ndimage.uniform_filter(p, size=(2 * noise.blur_radius + 1,) * 2 + (1,), mode="nearest")
        logits = np.log(p + _LOGIT_FLOOR) / noise.prob_temperature
        p = np.exp(logits - logits.max(axis=2, keepdims=True))
        if noise.downsample > 1:
            p = _downsample(p, noise.downsample)
        out.append(PatchPrediction(spec, ProbTensor.normalized(p), id=z))
    return out


def make_scene_patches(spec: SceneSpec, layout: Optional[LayoutConfig] = None):
    """Convenience: scene plus patch predictions under the scene's noise settings."""
    scene = generate_scene(spec)
    layout = layout or spec.layout()
    return scene, corrupt_to_patches(scene.gt, layout, spec.noise, spec.seed)
