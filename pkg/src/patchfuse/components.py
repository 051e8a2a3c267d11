"""Connected components of same-label foreground pixels and their vertical depth order."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import ndimage

from .core import DEFAULT_N_MAX, LabelMap, Rect

log = logging.getLogger(__name__)

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def label_same_value(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected components of equal, non-zero labels.

    Returns an int32 array with component ids (``-1`` on background) numbered
    in raster order of each component's first pixel, and the component count.
    """
    labels = np.asarray(labels)
    comp = np.full(labels.shape, -1, dtype=np.int32)
    n = 0
    for lab in np.unique(labels):
        if lab == 0:
            continue
        cc, k = ndimage.label(labels == lab, structure=FOUR_CONNECTED)
        mask = cc > 0
        comp[mask] = cc[mask] - 1 + n
        n += k
    if n == 0:
        return comp, 0
    flat = comp.ravel()
    fg = np.flatnonzero(flat >= 0)
    first = np.full(n, flat.size, dtype=np.int64)
    np.minimum.at(first, flat[fg], fg)
    remap = np.empty(n, dtype=np.int32)
    remap[np.argsort(first, kind="stable")] = np.arange(n, dtype=np.int32)
    comp[comp >= 0] = remap[comp[comp >= 0]]
    return comp, n


@dataclass(frozen=True, eq=False)
class Component:
    id: int
    label: int
    pixels: np.ndarray  # flat row-major indices, ascending
    bbox: Rect
    order: int = 0

    @property
    def size(self) -> int:
        return int(self.pixels.size)


@dataclass(frozen=True, eq=False)
class ComponentSet:
    components: tuple
    pixel_to_component: np.ndarray  # (H, W) int32, -1 on background

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixel_to_component.shape

    def __len__(self):
        return len(self.components)

    def orders_map(self) -> np.ndarray:
        """Per-pixel component order O(p), 0 on background."""
        orders = np.array([c.order for c in self.components] + [0], dtype=np.int32)
        return orders[self.pixel_to_component]  # index -1 hits the trailing 0


def label_components(m: LabelMap) -> ComponentSet:
    """Components of the label map with orders left unset (0)."""
    comp, n = label_same_value(m.labels)
    flat = comp.ravel()
    idx = np.argsort(flat, kind="stable")
    counts = np.bincount(flat[flat >= 0], minlength=n)
    starts = np.concatenate([[0], np.cumsum(counts)]) + np.count_nonzero(flat < 0)
    boxes = ndimage.find_objects(comp + 1, max_label=n)
    lab_flat = m.flat()
    comps = []
    for i in range(n):
        pix = idx[starts[i]:starts[i + 1]]
        ys, xs = boxes[i]
        comps.append(Component(
            id=i, label=int(lab_flat[pix[0]]), pixels=pix,
            bbox=Rect(xs.start, ys.start, xs.stop - xs.start, ys.stop - ys.start)))
    return ComponentSet(tuple(comps), comp)


def _bottom_key(c: Component):
    return (-(c.bbox.y1 - 1), c.bbox.center()[1], c.id)


def _center_key(c: Component):
    row, col = c.bbox.center()
    return (-row, col, c.id)


def rank_components(cs: ComponentSet, key: Callable, n_max: int = DEFAULT_N_MAX) -> list[int]:
    """1-based ranks by ascending ``key``; ranks past ``n_max`` are clamped."""
    ranks = [0] * len(cs)
    for r, c in enumerate(sorted(cs.components, key=key), start=1):
        ranks[c.id] = min(r, n_max)
    if len(cs) > n_max:
        log.warning("%d components exceed n_max=%d; farthest ones share order %d",
                    len(cs), n_max, n_max)
    return ranks


def order_components(cs: ComponentSet, n_max: int = DEFAULT_N_MAX) -> ComponentSet:
    """Depth order from vertical position: the lowest bbox bottom row is nearest (order 1).

    Ties fall to the smaller bbox-center column, then the smaller id.
    """
    ranks = rank_components(cs, _bottom_key, n_max)
    comps = tuple(replace(c, order=ranks[c.id]) for c in cs.components)
    return ComponentSet(comps, cs.pixel_to_component)
