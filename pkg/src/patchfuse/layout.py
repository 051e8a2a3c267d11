"""Multi-scale patch tiling and coarse-to-fine upsampling of patch outputs."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import DimensionError, ProbTensor, Rect


class Scale(str, Enum):
    LARGE = "large"
    MEDIUM = "medium"
    SMALL = "small"


class EmptyLayout(ValueError):
    """No patch fits the configured image."""


@dataclass(frozen=True)
class PatchSpec:
    rect: Rect
    scale: Scale


@dataclass
class LayoutConfig:
    image_w: int
    image_h: int
    horizon_y: int
    patch_sizes: dict = field(default_factory=lambda: {Scale.LARGE: 192, Scale.MEDIUM: 96, Scale.SMALL: 48})
    strides: dict = field(default_factory=lambda: {Scale.LARGE: 96, Scale.MEDIUM: 48, Scale.SMALL: 24})
    band_half_heights: dict = field(default_factory=lambda: {Scale.MEDIUM: 48, Scale.SMALL: 24})

    def __post_init__(self):
        self.patch_sizes = {Scale(k): int(v) for k, v in self.patch_sizes.items()}
        self.strides = {Scale(k): int(v) for k, v in self.strides.items()}
        self.band_half_heights = {Scale(k): int(v) for k, v in self.band_half_heights.items()}
        self.validate()

    def validate(self):
        if self.image_w <= 0 or self.image_h <= 0:
            raise ValueError("image dimensions must be positive")
        sizes = self.patch_sizes
        if set(sizes) != set(Scale):
            raise ValueError("patch_sizes needs large, medium and small entries")
        if not sizes[Scale.LARGE] > sizes[Scale.MEDIUM] > sizes[Scale.SMALL] > 0:
            raise ValueError("patch sizes must satisfy large > medium > small > 0")
        for s in Scale:
            if self.strides.get(s, 0) < 1:
                raise ValueError(f"stride for {s.value} must be >= 1")
        for s in (Scale.MEDIUM, Scale.SMALL):
            if self.band_half_heights.get(s, -1) < 0:
                raise ValueError(f"band_half_heights[{s.value}] must be >= 0")

    def to_dict(self) -> dict:
        return {
            "image_w": self.image_w,
            "image_h": self.image_h,
            "horizon_y": self.horizon_y,
            "patch_sizes": {k.value: v for k, v in self.patch_sizes.items()},
            "strides": {k.value: v for k, v in self.strides.items()},
            "band_half_heights": {k.value: v for k, v in self.band_half_heights.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LayoutConfig":
        return cls(**d)


def _tile_1d(start: int, end: int, size: int, stride: int, limit: int) -> list[tuple[int, int]]:
    """Windows ``(offset, length)`` covering ``[start, end)`` inside ``[0, limit)``.

    Windows start at ``start`` and advance by ``stride`` (capped at ``size`` so
    no gaps open up); a leftover strip is covered by one window aligned to
    ``end``. A window that would cross ``limit`` is clipped.
    """
    stride = min(stride, size)
    if end <= start:
        return []
    if start + size > limit:
        return [(start, limit - start)]
    if end - start <= size:
        return [(start, size)]
    out = []
    pos = start
    while pos + size <= end:
        out.append((pos, size))
        pos += stride
    if out[-1][0] + size < end:
        out.append((end - size, size))
    return out


def tile_patches(cfg: LayoutConfig) -> list[PatchSpec]:
    """Patch footprints for all three scales, large first.

    Large patches tile everything from ``horizon_y`` down; medium and small
    ones only tile the band ``horizon_y +- band_half_height``.
    """
    W, H = cfg.image_w, cfg.image_h
    out: list[PatchSpec] = []
    for scale in Scale:
        size, stride = cfg.patch_sizes[scale], cfg.strides[scale]
        if scale is Scale.LARGE:
            top, bottom = max(cfg.horizon_y, 0), H
        else:
            hh = cfg.band_half_heights[scale]
            top, bottom = max(cfg.horizon_y - hh, 0), min(cfg.horizon_y + hh, H)
        rows = _tile_1d(top, bottom, size, stride, H)
        cols = _tile_1d(0, W, size, stride, W)
        for y0, h in rows:
            for x0, w in cols:
                out.append(PatchSpec(Rect(x0, y0, w, h), scale))
    if not out:
        raise EmptyLayout(f"no patch fits a {W}x{H} image with horizon_y={cfg.horizon_y}")
    return out


def _interp_matrix(n_src: int, n_dst: int) -> np.ndarray:
    """Align-corners linear interpolation weights, shape (n_dst, n_src)."""
    m = np.zeros((n_dst, n_src))
    if n_src == 1 or n_dst == 1:
        m[:, 0] = 1.0
        return m
    pos = np.arange(n_dst) * (n_src - 1) / (n_dst - 1)
    lo = np.minimum(np.floor(pos).astype(int), n_src - 2)
    frac = pos - lo
    rows = np.arange(n_dst)
    m[rows, lo] = 1.0 - frac
    m[rows, lo + 1] = frac
    return m


def upsample_bilinear(p: ProbTensor, target_w: int, target_h: int) -> ProbTensor:
    """Bilinear (align-corners) upsampling of every label channel, renormalized per pixel."""
    if target_w < p.width or target_h < p.height:
        raise DimensionError(
            f"cannot upsample {p.width}x{p.height} to smaller {target_w}x{target_h}")
    if (target_w, target_h) == (p.width, p.height):
        return p
    ry = _interp_matrix(p.height, target_h)
    rx = _interp_matrix(p.width, target_w)
    src = p.probs.astype(np.float64)
    out = np.einsum("yi,ijl,xj->yxl", ry, src, rx, optimize=True)
    np.clip(out, 0.0, None, out=out)
    return ProbTensor.normalized(out)
