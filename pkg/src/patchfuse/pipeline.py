"""End-to-end fusion of patch predictions into one depth-ordered instance map."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .components import ComponentSet, label_components, order_components
from .core import DEFAULT_N_MAX, LabelMap
from .energy import DEFAULT_LONG_K, EnergyModel, Weights, build_energy_model, energy_terms, total_energy
from .inference import ACCEPT_EPS, SwapSchedule, initial_labeling, minimize
from .merging import MergedMap, PatchPrediction, merge_patches
from .postprocess import DEFAULT_MIN_SIZE, postprocess

log = logging.getLogger(__name__)


@dataclass
class FuseConfig:
    weights: Weights = field(default_factory=Weights)
    long_k: int = DEFAULT_LONG_K
    seed: int = 0
    max_sweeps: int = 5
    epsilon: float = ACCEPT_EPS
    min_size: int = DEFAULT_MIN_SIZE
    postprocess: bool = True
    n_max: int = DEFAULT_N_MAX

    def schedule(self) -> SwapSchedule:
        return SwapSchedule.all_pairs(self.n_max, self.max_sweeps, self.epsilon)


@dataclass
class FuseResult:
    labels: LabelMap            # final output (post-processed unless disabled)
    mrf_labels: LabelMap        # minimizer output before post-processing
    init_labels: LabelMap
    merged: MergedMap
    components: ComponentSet
    model: EnergyModel
    initial_energy: float
    final_energy: float
    energy_trace: list
    postprocessed: bool
    timings: dict

    def log_dict(self) -> dict:
        return {
            "n_patches": len(self.merged.floors),
            "n_components": len(self.components),
            "n_long_edges": int(self.model.long_p.size),
            "initial_energy": self.initial_energy,
            "final_energy": self.final_energy,
            "energy_terms": energy_terms(self.mrf_labels, self.model),
            "energy_trace": self.energy_trace,
            "accepted_moves": len(self.energy_trace),
            "postprocess": "applied" if self.postprocessed else "skipped (--no-pp)",
            "timings_s": self.timings,
        }


def fuse(preds: list[PatchPrediction], width: int, height: int, cfg: FuseConfig = FuseConfig()) -> FuseResult:
    t = {}
    t0 = time.perf_counter()
    merged = merge_patches(preds, width, height, cfg.n_max)
    t["merge"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cs = order_components(label_components(merged.label_map), cfg.n_max)
    model = build_energy_model(merged, cs, cfg.weights, cfg.long_k, cfg.seed, cfg.n_max)
    t["model"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    init = initial_labeling(cs, cfg.n_max)
    e0 = total_energy(init, model)
    out, trace = minimize(init, model, cfg.schedule())
    t["inference"] = time.perf_counter() - t0
    e1 = trace[-1] if trace else e0
    log.info("energy %.4f -> %.4f in %d accepted moves", e0, e1, len(trace))

    t0 = time.perf_counter()
    final = postprocess(out, cfg.min_size) if cfg.postprocess else out
    t["postprocess"] = time.perf_counter() - t0
    return FuseResult(final, out, init, merged, cs, model, e0, e1, trace, cfg.postprocess, t)
