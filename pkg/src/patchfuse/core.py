"""Grid types shared by every stage: label maps, probability tensors, rectangles.

Pixel index convention everywhere is row-major, ``p = y * width + x``.
Arrays are stored as ``(height, width)`` / ``(height, width, n_labels)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

DEFAULT_N_MAX = 9
PROB_ATOL = 1e-6


class DimensionError(ValueError):
    """Array shapes do not agree."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Rect:
    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"Rect needs positive size, got w={self.w}, h={self.h}")

    @property
    def x1(self) -> int:
        return self.x0 + self.w

    @property
    def y1(self) -> int:
        return self.y0 + self.h

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def inside(self, width: int, height: int) -> bool:
        return self.x0 >= 0 and self.y0 >= 0 and self.x1 <= width and self.y1 <= height

    def center(self) -> tuple[float, float]:
        """(row, column) of the rectangle center in pixel coordinates."""
        return self.y0 + (self.h - 1) / 2.0, self.x0 + (self.w - 1) / 2.0


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Depth-ordered instance labels, 0 = background, 1 = nearest instance."""

    labels: np.ndarray
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        a = np.asarray(self.labels)
        if a.ndim != 2:
            raise DimensionError(f"label map must be 2-D, got shape {a.shape}")
        if not np.issubdtype(a.dtype, np.integer):
            raise TypeError(f"labels must be integers, got {a.dtype}")
        object.__setattr__(self, "labels", _frozen(a.astype(np.int32, copy=False)))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def flat(self) -> np.ndarray:
        return self.labels.ravel()

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return self.n_max == other.n_max and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return f"LabelMap({self.width}x{self.height}, n_max={self.n_max})"

    @classmethod
    def from_flat(cls, values, width: int, height: int, n_max: int = DEFAULT_N_MAX) -> "LabelMap":
        values = np.asarray(values)
        if values.size != width * height:
            raise DimensionError(f"{values.size} labels for a {width}x{height} map")
        return cls(values.reshape(height, width), n_max)

    @classmethod
    def background(cls, width: int, height: int, n_max: int = DEFAULT_N_MAX) -> "LabelMap":
        return cls(np.zeros((height, width), dtype=np.int32), n_max)


@dataclass(frozen=True)
class Violation:
    message: str


def validate_label_map(m: LabelMap, n_max: Optional[int] = None) -> Optional[Violation]:
    """Return the first violated invariant, or ``None`` when the map is valid."""
    n_max = m.n_max if n_max is None else n_max
    flat = m.flat()
    if flat.size != m.width * m.height:
        return Violation(f"array length {flat.size} != {m.width}*{m.height}")
    if flat.size == 0:
        return None
    bad = np.flatnonzero((flat < 0) | (flat > n_max))
    if bad.size:
        v = int(flat[bad[0]])
        if v < 0:
            return Violation(f"label {v} < 0 at pixel {int(bad[0])}")
        return Violation(f"label {v} > {n_max} at pixel {int(bad[0])}")
    return None


@dataclass(frozen=True, eq=False)
class ProbTensor:
    """Per-pixel distribution over ``n_labels`` depth levels (label 0 = background)."""

    probs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.probs, dtype=np.float32)
        if a.ndim != 3:
            raise DimensionError(f"probability tensor must be HxWxL, got shape {a.shape}")
        if a.shape[2] < 2:
            raise ValueError("need at least two labels (background + one instance)")
        if a.size and (a.min() < 0 or not np.allclose(a.sum(axis=2, dtype=np.float64), 1.0, rtol=0, atol=PROB_ATOL)):
            raise ValueError("per-pixel probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "probs", _frozen(a))

    @property
    def height(self) -> int:
        return self.probs.shape[0]

    @property
    def width(self) -> int:
        return self.probs.shape[1]

    @property
    def n_labels(self) -> int:
        return self.probs.shape[2]

    @classmethod
    def normalized(cls, raw: np.ndarray) -> "ProbTensor":
        """Build from non-negative weights, renormalizing each pixel."""
        raw = np.asarray(raw, dtype=np.float64)
        s = raw.sum(axis=2, keepdims=True)
        if np.any(s <= 0):
            raise ValueError("every pixel needs positive total weight")
        out = (raw / s).astype(np.float32)
        # with many labels float32 rounding can exceed the tolerance; only then fold the
        # residue into the largest entry (doing it always would break exact ties)
        resid = 1.0 - out.sum(axis=2, dtype=np.float64)
        bad = np.abs(resid) > PROB_ATOL / 2
        if bad.any():
            idx = out.argmax(axis=2)
            yy, xx = np.nonzero(bad)
            out[yy, xx, idx[yy, xx]] += resid[yy, xx].astype(np.float32)
        return cls(out)

    @classmethod
    def one_hot(cls, labels: np.ndarray, n_labels: int) -> "ProbTensor":
        labels = np.asarray(labels)
        return cls(np.eye(n_labels, dtype=np.float32)[labels])


def argmax_map(p: ProbTensor, n_max: Optional[int] = None) -> LabelMap:
    """Per-pixel most probable label; ties go to the smaller label."""
    # np.argmax returns the first maximal index, i.e. the smaller label
    lab = np.argmax(p.probs, axis=2).astype(np.int32)
    return LabelMap(lab, p.n_labels - 1 if n_max is None else n_max)
