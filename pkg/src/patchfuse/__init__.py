"""Fuse overlapping patch-level instance predictions into one depth-ordered labeling."""
from .core import DEFAULT_N_MAX, DimensionError, LabelMap, ProbTensor, Rect
from .energy import EnergyModel, Weights, build_energy_model, energy_terms, total_energy
from .inference import SwapSchedule, minimize
from .layout import LayoutConfig, PatchSpec, Scale, tile_patches, upsample_bilinear
from .merging import MergedMap, PatchPrediction, merge_patches
from .metrics import MetricsReport, aggregate, evaluate
from .pipeline import FuseConfig, FuseResult, fuse
from .postprocess import postprocess
from .synth import NoiseSpec, SceneSpec, corrupt_to_patches, generate_scene

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_N_MAX", "DimensionError", "LabelMap", "ProbTensor", "Rect",
    "EnergyModel", "Weights", "build_energy_model", "energy_terms", "total_energy",
    "SwapSchedule", "minimize",
    "LayoutConfig", "PatchSpec", "Scale", "tile_patches", "upsample_bilinear",
    "MergedMap", "PatchPrediction", "merge_patches",
    "MetricsReport", "aggregate", "evaluate",
    "FuseConfig", "FuseResult", "fuse",
    "postprocess",
    "NoiseSpec", "SceneSpec", "corrupt_to_patches", "generate_scene",
]
