"""Cleanup of the inferred labeling: drop small instances, fill holes, relabel and reorder."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .components import FOUR_CONNECTED, _center_key, label_components, label_same_value, rank_components
from .core import LabelMap

DEFAULT_MIN_SIZE = 200

_OFFSETS_8 = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]


def remove_small(m: LabelMap, min_size: int = DEFAULT_MIN_SIZE) -> LabelMap:
    """Set every same-label 4-connected component below ``min_size`` pixels to background."""
    comp, n = label_same_value(m.labels)
    if n == 0:
        return m
    sizes = np.bincount(comp[comp >= 0], minlength=n)
    small = np.zeros(n + 1, dtype=bool)
    small[:n] = sizes < min_size
    out = m.labels.copy()
    out[small[comp]] = 0  # comp == -1 indexes the trailing False
    return LabelMap(out, m.n_max)


def fill_holes(m: LabelMap) -> LabelMap:
    """Fill enclosed background regions whose whole 8-neighbour rim carries one label.

    Regions touching the image border, or bounded by several instances, stay.
    """
    lab = m.labels
    H, W = lab.shape
    regions, n = ndimage.label(lab == 0, structure=FOUR_CONNECTED)
    if n == 0:
        return m
    touches = np.zeros(n + 1, dtype=bool)
    for edge in (regions[0], regions[-1], regions[:, 0], regions[:, -1]):
        touches[edge] = True
    lo = np.full(n + 1, np.iinfo(np.int32).max, dtype=np.int64)
    hi = np.full(n + 1, -1, dtype=np.int64)
    for dy, dx in _OFFSETS_8:
        src = regions[max(0, -dy):H - max(0, dy), max(0, -dx):W - max(0, dx)]
        nb_reg = regions[max(0, dy):H - max(0, -dy), max(0, dx):W - max(0, -dx)]
        nb_lab = lab[max(0, dy):H - max(0, -dy), max(0, dx):W - max(0, -dx)]
        rim = (src > 0) & (nb_reg != src)
        np.minimum.at(lo, src[rim], nb_lab[rim])
        np.maximum.at(hi, src[rim], nb_lab[rim])
    hole = ~touches & (lo == hi) & (lo > 0)
    hole[0] = False
    if not hole.any():
        return m
    out = lab.copy()
    mask = hole[regions]
    out[mask] = lo[regions[mask]]
    return LabelMap(out, m.n_max)


def relabel_reorder(m: LabelMap) -> LabelMap:
    """One label per connected instance, 1..K by descending bbox-center row.

    Ties go to the smaller center column, then raster order; labels past
    ``n_max`` are clamped.
    """
    cs = label_components(m)
    if len(cs) == 0:
        return m
    ranks = np.array(rank_components(cs, _center_key, m.n_max) + [0], dtype=np.int32)
    return LabelMap(ranks[cs.pixel_to_component], m.n_max)


def postprocess(m: LabelMap, min_size: int = DEFAULT_MIN_SIZE) -> LabelMap:
    return relabel_reorder(fill_holes(remove_small(m, min_size)))
