"""The four-term MRF energy over depth-ordered instance labelings.

Terms, summed over pixels / edges:

* CNN floors: each covering patch rewards ``y_p >= floor`` with ``-w_cnn``.
* Component order: rewards ``y_p >= O(p)`` with ``-w_cco`` on foreground pixels.
* Long range, sampled between components: rewards ``y_q > y_p != 0`` when
  ``O(q) > O(p)``.
* Short range, 4-neighbours: signed Potts that keeps the merged map's
  agreement pattern (equal stays equal, different stays different).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .components import ComponentSet
from .core import DEFAULT_N_MAX, DimensionError, LabelMap
from .merging import MergedMap

DEFAULT_LONG_K = 20000


@dataclass(frozen=True)
class Weights:
    cnn: float = 1.0
    cco: float = 1.0
    long: float = 1.0
    short: float = 0.5
    # divide each pair's long weight by that pair's edge count
    normalize_long: bool = True

    def __post_init__(self):
        for name in ("cnn", "cco", "long", "short"):
            if getattr(self, name) < 0:
                raise ValueError(f"weight {name} must be >= 0")

    @classmethod
    def zero(cls) -> "Weights":
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, eq=False)
class EnergyModel:
    shape: tuple[int, int]
    n_max: int
    floor_hist: np.ndarray   # (P, F) int: covering patches per floor label
    orders: np.ndarray       # (P,) int: O(p), 0 on background
    comp_of: np.ndarray      # (P,) int: component id, -1 on background
    long_p: np.ndarray       # (E,) nearer endpoint
    long_q: np.ndarray       # (E,) farther endpoint
    long_w: np.ndarray       # (E,) per-edge weight
    agree_h: np.ndarray      # (H, W-1) bool, pixel (y,x) vs (y,x+1)
    agree_v: np.ndarray      # (H-1, W) bool, pixel (y,x) vs (y+1,x)
    weights: Weights = field(default_factory=Weights)
    cnn_table: np.ndarray = field(init=False, repr=False)  # (P, n_max+1)

    def __post_init__(self):
        # cnn_table[p, y] = -w_cnn * #{patches with floor <= y}
        F = self.floor_hist.shape[1]
        cum = np.cumsum(self.floor_hist, axis=1)
        if F >= self.n_max + 1:
            cum = cum[:, : self.n_max + 1]
        else:
            cum = np.concatenate([cum, np.repeat(cum[:, -1:], self.n_max + 1 - F, axis=1)], axis=1)
        object.__setattr__(self, "cnn_table", -self.weights.cnn * cum.astype(np.float64))

    @property
    def n_pixels(self) -> int:
        return self.shape[0] * self.shape[1]

    def with_weights(self, weights: Weights, long_w: np.ndarray | None = None) -> "EnergyModel":
        return EnergyModel(self.shape, self.n_max, self.floor_hist, self.orders, self.comp_of,
                           self.long_p, self.long_q, self.long_w if long_w is None else long_w,
                           self.agree_h, self.agree_v, weights)

    def short_edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All 4-neighbour pairs once each: (p, q, agree)."""
        H, W = self.shape
        idx = np.arange(H * W).reshape(H, W)
        p = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
        q = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
        a = np.concatenate([self.agree_h.ravel(), self.agree_v.ravel()])
        return p, q, a


# -- single-term evaluators ----------------------------------------------------

def e_cnn(p: int, y_p: int, model: EnergyModel) -> float:
    satisfied = int(model.floor_hist[p, : y_p + 1].sum())
    return -model.weights.cnn * satisfied


def e_cco(p: int, y_p: int, model: EnergyModel) -> float:
    o = int(model.orders[p])
    if model.comp_of[p] < 0 or o == 0:
        return 0.0
    return -model.weights.cco if y_p >= o else 0.0


def e_long(y_p: int, y_q: int, o_p: int, o_q: int, weight: float = 1.0) -> float:
    """Edge oriented so that ``p`` is the nearer endpoint."""
    return -weight if (y_q > y_p and y_p != 0 and o_q > o_p) else 0.0


def e_short(y_p: int, y_q: int, agree: bool, weight: float = 1.0) -> float:
    if agree:
        return weight if y_p != y_q else 0.0
    return weight if y_p == y_q else 0.0


# -- model construction ----------------------------------------------------------

def sample_long_edges(cs: ComponentSet, k: int = DEFAULT_LONG_K, seed: int = 0):
    """Up to ``k`` distinct pixel pairs per component pair, sampled uniformly.

    Pairs are visited in (id_a, id_b) order with one seeded generator; pairs
    with at most ``k`` combinations are taken exhaustively without drawing.
    Returns ``(p, q, pair_index)`` with ``p`` in the nearer component (lower
    order; lower id on equal orders).
    """
    rng = np.random.default_rng(seed)
    comps = cs.components
    ps, qs, pid = [], [], []
    pair = 0
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            a, b = comps[i], comps[j]
            if b.order < a.order:
                a, b = b, a
            m = a.size * b.size
            if m <= k:
                sel = np.arange(m)
            else:
                sel = rng.choice(m, size=k, replace=False)
            ps.append(a.pixels[sel // b.size])
            qs.append(b.pixels[sel % b.size])
            pid.append(np.full(sel.size, pair, dtype=np.int64))
            pair += 1
    if not ps:
        e = np.zeros(0, dtype=np.int64)
        return e, e.copy(), e.copy()
    return (np.concatenate(ps).astype(np.int64), np.concatenate(qs).astype(np.int64),
            np.concatenate(pid))


def build_energy_model(merged: MergedMap, cs: ComponentSet, weights: Weights = Weights(),
                       k: int = DEFAULT_LONG_K, seed: int = 0,
                       n_max: int = DEFAULT_N_MAX) -> EnergyModel:
    """Energy model for one image from its merged map and ordered components."""
    lab = merged.label_map.labels
    H, W = lab.shape
    n_levels = max(n_max + 1, max((int(f.labels.max()) + 1 for f in merged.floors), default=1))
    hist = merged.floor_histogram(n_levels).reshape(H * W, n_levels)
    p, q, pid = sample_long_edges(cs, k, seed)
    w = np.full(p.size, weights.long, dtype=np.float64)
    if weights.normalize_long and p.size:
        w /= np.bincount(pid)[pid]
    return EnergyModel(
        shape=(H, W), n_max=n_max, floor_hist=hist,
        orders=cs.orders_map().ravel(), comp_of=cs.pixel_to_component.ravel(),
        long_p=p, long_q=q, long_w=w,
        agree_h=lab[:, :-1] == lab[:, 1:], agree_v=lab[:-1, :] == lab[1:, :],
        weights=weights)


def empty_model(width: int, height: int, n_max: int = DEFAULT_N_MAX,
                weights: Weights = Weights()) -> EnergyModel:
    """No patches, no components, no edges: every labeling has energy 0."""
    P = width * height
    e = np.zeros(0, dtype=np.int64)
    return EnergyModel((height, width), n_max, np.zeros((P, 1), dtype=np.int32),
                       np.zeros(P, dtype=np.int32), np.full(P, -1, dtype=np.int32),
                       e, e.copy(), np.zeros(0), np.ones((height, max(width - 1, 0)), bool),
                       np.ones((max(height - 1, 0), width), bool),
                       Weights(weights.cnn, weights.cco, weights.long, 0.0))


# -- vectorized evaluation -----------------------------------------------------

def unary_table(model: EnergyModel) -> np.ndarray:
    """E_CNN + E_CCO for every pixel and label, shape (P, n_max+1)."""
    labels = np.arange(model.n_max + 1)
    fg = (model.comp_of >= 0) & (model.orders > 0)
    cco = np.where(fg[:, None] & (labels[None, :] >= model.orders[:, None]), -model.weights.cco, 0.0)
    return model.cnn_table + cco


def energy_terms(m: LabelMap, model: EnergyModel) -> dict[str, float]:
    if m.shape != model.shape:
        raise DimensionError(f"label map {m.shape} vs model {model.shape}")
    y = m.flat().astype(np.int64)
    if y.size and (y.min() < 0 or y.max() > model.n_max):
        raise ValueError(f"labels must lie in 0..{model.n_max}")
    P = y.size
    cnn = model.cnn_table[np.arange(P), y]
    fg = (model.comp_of >= 0) & (model.orders > 0)
    cco = np.where(fg & (y >= model.orders), -model.weights.cco, 0.0)
    yp, yq = y[model.long_p], y[model.long_q]
    op, oq = model.orders[model.long_p], model.orders[model.long_q]
    lng = np.where((yq > yp) & (yp != 0) & (oq > op), -model.long_w, 0.0)
    lab = m.labels
    eq_h = lab[:, :-1] == lab[:, 1:]
    eq_v = lab[:-1, :] == lab[1:, :]
    n_short = (np.count_nonzero(eq_h != model.agree_h) + np.count_nonzero(eq_v != model.agree_v))
    return {
        "cnn": float(np.sum(cnn)),
        "cco": float(np.sum(cco)),
        "long": float(np.sum(lng)),
        "short": float(model.weights.short * n_short),
    }


def total_energy(m: LabelMap, model: EnergyModel) -> float:
    t = energy_terms(m, model)
    return t["cnn"] + t["cco"] + t["long"] + t["short"]
