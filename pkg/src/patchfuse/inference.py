"""Swap-move minimization of the MRF energy, each move solved by QPBO."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .components import ComponentSet
from .core import DimensionError, LabelMap
from .energy import EnergyModel, total_energy, unary_table
from .qpbo import BinaryEnergy, PartialLabeling, solve_qpbo

log = logging.getLogger(__name__)

ACCEPT_EPS = 1e-12


@dataclass
class SwapSchedule:
    label_pairs: list
    max_sweeps: int = 5
    epsilon: float = ACCEPT_EPS

    def __post_init__(self):
        pairs = [tuple(int(v) for v in p) for p in self.label_pairs]
        if len(set(pairs)) != len(pairs):
            raise ValueError("label pairs must be distinct")
        if any(not 0 <= a < b for a, b in pairs):
            raise ValueError("label pairs need 0 <= alpha < beta")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        self.label_pairs = pairs

    @classmethod
    def all_pairs(cls, n_max: int, max_sweeps: int = 5, epsilon: float = ACCEPT_EPS) -> "SwapSchedule":
        pairs = [(a, b) for a in range(n_max + 1) for b in range(a + 1, n_max + 1)]
        return cls(pairs, max_sweeps, epsilon)


class SwapProblem(NamedTuple):
    energy: BinaryEnergy
    pixels: np.ndarray   # flat index of variable i; bit 0 -> alpha, 1 -> beta
    constant: float      # energy of everything not touched by the variables


@dataclass(eq=False)
class _Cache:
    """Per-model arrays reused by every move."""
    unary: np.ndarray
    sp: np.ndarray
    sq: np.ndarray
    sa: np.ndarray
    lp: np.ndarray
    lq: np.ndarray
    lw: np.ndarray

    @classmethod
    def of(cls, model: EnergyModel) -> "_Cache":
        sp, sq, sa = model.short_edges()
        # long edges between equal orders (or with zero weight) never contribute
        live = (model.orders[model.long_q] > model.orders[model.long_p]) & (model.long_w != 0)
        return cls(unary_table(model), sp, sq, sa,
                   model.long_p[live], model.long_q[live], model.long_w[live])


def _short(yp, yq, agree, lam):
    return lam * np.where(agree, yp != yq, yp == yq)


def _long(yp, yq, w):
    # cached edges already satisfy O(q) > O(p)
    return np.where((yq > yp) & (yp != 0), -w, 0.0)


def build_swap_energy(current: LabelMap, alpha: int, beta: int, model: EnergyModel,
                      cache: Optional[_Cache] = None) -> SwapProblem:
    """Binary subproblem over pixels currently labeled alpha or beta."""
    if alpha == beta:
        raise ValueError("alpha and beta must differ")
    if current.shape != model.shape:
        raise DimensionError(f"label map {current.shape} vs model {model.shape}")
    cache = cache or _Cache.of(model)
    y = current.flat().astype(np.int64)
    part = (y == alpha) | (y == beta)
    pixels = np.flatnonzero(part)
    n = pixels.size
    var = np.full(y.size, -1, dtype=np.int64)
    var[pixels] = np.arange(n)
    U = cache.unary
    unary = np.stack([U[pixels, alpha], U[pixels, beta]], axis=1)
    const = float(U[~part, y[~part]].sum())

    edges, tables = [], []

    def add_pairwise(p, q, f):
        """f(label_p, label_q) evaluates the edge terms vectorized."""
        nonlocal const
        pp, pq = part[p], part[q]
        yp, yq = y[p], y[q]
        both = pp & pq
        if both.any():
            b = np.flatnonzero(both)
            t = np.stack([f(b, alpha, alpha), f(b, alpha, beta), f(b, beta, alpha), f(b, beta, beta)], axis=1)
            keep = np.any(t != 0, axis=1)
            edges.append(np.stack([var[p[b[keep]]], var[q[b[keep]]]], axis=1))
            tables.append(t[keep])
        only_p = np.flatnonzero(pp & ~pq)
        if only_p.size:
            v = var[p[only_p]]
            unary[:, 0] += np.bincount(v, f(only_p, alpha, yq[only_p]), n)
            unary[:, 1] += np.bincount(v, f(only_p, beta, yq[only_p]), n)
        only_q = np.flatnonzero(pq & ~pp)
        if only_q.size:
            v = var[q[only_q]]
            unary[:, 0] += np.bincount(v, f(only_q, yp[only_q], alpha), n)
            unary[:, 1] += np.bincount(v, f(only_q, yp[only_q], beta), n)
        frozen = np.flatnonzero(~pp & ~pq)
        if frozen.size:
            const += float(np.sum(f(frozen, yp[frozen], yq[frozen])))

    lam = model.weights.short
    if lam != 0:
        sp, sq, sa = cache.sp, cache.sq, cache.sa
        add_pairwise(sp, sq, lambda i, a, b: _short(a, b, sa[i], lam))
    if cache.lp.size:
        lw = cache.lw
        add_pairwise(cache.lp, cache.lq, lambda i, a, b: _long(a, b, lw[i]))

    if edges:
        e = np.concatenate(edges)
        t = np.concatenate(tables)
    else:
        e, t = np.zeros((0, 2), dtype=np.int64), np.zeros((0, 4))
    return SwapProblem(BinaryEnergy(unary, e, t), pixels, const)


def apply_move(current: LabelMap, alpha: int, beta: int, labeling: PartialLabeling) -> LabelMap:
    """Labeled variables take alpha (0) or beta (1); unlabeled ones keep their label."""
    y = current.flat()
    pixels = np.flatnonzero((y == alpha) | (y == beta))
    if len(labeling) != pixels.size:
        raise DimensionError(f"{len(labeling)} binary values for {pixels.size} swap pixels")
    out = y.copy()
    v = labeling.values
    out[pixels[v == 0]] = alpha
    out[pixels[v == 1]] = beta
    return LabelMap(out.reshape(current.shape), current.n_max)


def initial_labeling(cs: ComponentSet, n_max: int) -> LabelMap:
    """Every component pixel starts at its component order, background at 0."""
    return LabelMap(np.minimum(cs.orders_map(), n_max), n_max)


def minimize(init: LabelMap, model: EnergyModel, sched: SwapSchedule) -> tuple[LabelMap, list[float]]:
    """Sweep the schedule until a full sweep accepts nothing (or ``max_sweeps``).

    A move is kept only if the full energy drops by more than ``sched.epsilon``.
    The returned trace holds the energy after every accepted move.
    """
    if init.shape != model.shape:
        raise DimensionError(f"label map {init.shape} vs model {model.shape}")
    cache = _Cache.of(model)
    cur = init
    cur_e = total_energy(cur, model)
    trace: list[float] = []
    for sweep in range(sched.max_sweeps):
        accepted = 0
        for alpha, beta in sched.label_pairs:
            if beta > model.n_max:
                continue
            prob = build_swap_energy(cur, alpha, beta, model, cache)
            if prob.pixels.size == 0:
                continue
            lab = solve_qpbo(prob.energy)
            proposal = apply_move(cur, alpha, beta, lab)
            if np.array_equal(proposal.labels, cur.labels):
                continue
            e = total_energy(proposal, model)
            if e < cur_e - sched.epsilon:
                cur, cur_e = proposal, e
                trace.append(e)
                accepted += 1
        log.debug("sweep %d: %d moves accepted, energy %.6f", sweep, accepted, cur_e)
        if accepted == 0:
            break
    return cur, trace
