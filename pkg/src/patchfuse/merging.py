"""Combine overlapping patch predictions into one merged label map."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .components import label_same_value
from .core import DEFAULT_N_MAX, LabelMap, ProbTensor, Rect, argmax_map
from .layout import PatchSpec, upsample_bilinear

PATCH_LEVELS = 6  # background + up to 5 instances per patch


@dataclass(eq=False)
class PatchPrediction:
    """One patch footprint with its (possibly coarse) probability tensor."""

    spec: PatchSpec
    probs: ProbTensor
    id: int = 0
    _up: Optional[ProbTensor] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        r = self.spec.rect
        if self.probs.width > r.w or self.probs.height > r.h:
            raise ValueError(
                f"patch {self.id}: tensor {self.probs.width}x{self.probs.height} larger than rect {r.w}x{r.h}")

    @property
    def rect(self) -> Rect:
        return self.spec.rect

    def upsampled(self) -> ProbTensor:
        if self._up is None:
            self._up = upsample_bilinear(self.probs, self.rect.w, self.rect.h)
        return self._up

    def argmax(self) -> LabelMap:
        """The patch's own prediction y*_z at full resolution."""
        return argmax_map(self.upsampled())


def component_average(pred: PatchPrediction) -> ProbTensor:
    """Replace each foreground component's probability vectors by their mean.

    Components are 4-connected and computed per argmax label; background
    pixels keep their own vectors.
    """
    up = pred.upsampled()
    comp, n = label_same_value(pred.argmax().labels)
    if n == 0:
        return up
    probs = up.probs.astype(np.float64)
    flat = probs.reshape(-1, up.n_labels)
    cid = comp.ravel()
    fg = cid >= 0
    counts = np.bincount(cid[fg], minlength=n)
    means = np.stack(
        [np.bincount(cid[fg], weights=flat[fg, l], minlength=n) for l in range(up.n_labels)], axis=1)
    means /= counts[:, None]
    flat[fg] = means[cid[fg]]
    return ProbTensor.normalized(probs)


@dataclass(frozen=True, eq=False)
class PatchFloor:
    patch_id: int
    rect: Rect
    labels: np.ndarray  # the patch's argmax map over its rect


@dataclass(frozen=True, eq=False)
class MergedMap:
    label_map: LabelMap
    floors: tuple  # PatchFloor per input patch, input order

    def floors_at(self, x: int, y: int) -> list[tuple[int, int]]:
        """(patch_id, floor_label) for every patch covering pixel (x, y)."""
        out = []
        for f in self.floors:
            r = f.rect
            if r.x0 <= x < r.x1 and r.y0 <= y < r.y1:
                out.append((f.patch_id, int(f.labels[y - r.y0, x - r.x0])))
        return out

    def floor_histogram(self, n_levels: int) -> np.ndarray:
        """Counts of covering patches per floor label, shape (H, W, n_levels)."""
        H, W = self.label_map.shape
        hist = np.zeros((H, W, n_levels), dtype=np.int32)
        for f in self.floors:
            ys, xs = f.rect.slices
            for lab in np.unique(f.labels):
                hist[ys, xs, lab] += f.labels == lab
        return hist

    def coverage(self) -> np.ndarray:
        H, W = self.label_map.shape
        cov = np.zeros((H, W), dtype=np.int32)
        for f in self.floors:
            cov[f.rect.slices] += 1
        return cov


def merge_patches(preds: list[PatchPrediction], width: int, height: int,
                  n_max: int = DEFAULT_N_MAX) -> MergedMap:
    """Per pixel, take the label of the covering patch whose component-averaged
    distribution peaks highest.

    Each patch contributes its own argmax label. Exact ties in peak probability
    go to the higher label (local ranks never exceed the global one, so the
    higher candidate is the tighter bound), then to the lower patch index.
    Uncovered pixels stay background.
    """
    best_p = np.full((height, width), -1.0)
    best_l = np.zeros((height, width), dtype=np.int32)
    floors = []
    for pred in preds:
        r = pred.rect
        if not r.inside(width, height):
            raise ValueError(f"patch {pred.id} rect {r} outside {width}x{height} image")
        avg = component_average(pred).probs
        lab = pred.argmax().labels
        peak = np.take_along_axis(avg, lab[..., None], axis=2)[..., 0].astype(np.float64)
        ys, xs = r.slices
        bp, bl = best_p[ys, xs], best_l[ys, xs]
        take = (peak > bp) | ((peak == bp) & (lab > bl))
        bp[take] = peak[take]
        bl[take] = lab[take]
        floors.append(PatchFloor(pred.id, r, lab))
    return MergedMap(LabelMap(best_l, n_max), tuple(floors))
