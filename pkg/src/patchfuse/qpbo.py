"""Roof-duality (QPBO) for binary energies with arbitrary pairwise terms.

Each variable ``x_p`` gets two graph nodes, ``p`` (source side <=> x_p = 0) and
``p_bar`` (source side <=> x_p = 1). Submodular terms are represented inside
each copy, non-submodular ones by arcs crossing the copies, so the graph is
always regular. After max-flow, ``x_p`` is fixed when exactly one of its two
nodes is reachable from the source; otherwise it is left unlabeled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core import DimensionError
from .maxflow import FlowGraph

UNLABELED = -1


class NonFiniteCoefficient(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BinaryEnergy:
    """``E(x) = sum_p unary[p, x_p] + sum_e table[e, 2*x_u + x_v]``.

    ``table`` columns are (theta_00, theta_01, theta_10, theta_11).
    """

    unary: np.ndarray   # (n, 2)
    edges: np.ndarray   # (m, 2) int
    table: np.ndarray   # (m, 4)

    def __post_init__(self):
        unary = np.asarray(self.unary, dtype=np.float64).reshape(-1, 2)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        table = np.asarray(self.table, dtype=np.float64).reshape(-1, 4)
        if edges.shape[0] != table.shape[0]:
            raise DimensionError("one table row per edge required")
        if not (np.all(np.isfinite(unary)) and np.all(np.isfinite(table))):
            raise NonFiniteCoefficient("energy coefficients must be finite")
        n = unary.shape[0]
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise IndexError(f"edge endpoint outside 0..{n - 1}")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("pairwise term needs two distinct variables")
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "table", table)

    @property
    def n_vars(self) -> int:
        return self.unary.shape[0]

    @classmethod
    def from_terms(cls, n_vars: int, unary=None, pairwise=()) -> "BinaryEnergy":
        """``unary``: {var: (t0, t1)}; ``pairwise``: iterable of (u, v, t00, t01, t10, t11)."""
        u = np.zeros((n_vars, 2))
        for p, (t0, t1) in (unary or {}).items():
            u[p] += (t0, t1)
        pw = list(pairwise)
        edges = np.array([t[:2] for t in pw], dtype=np.int64).reshape(-1, 2)
        table = np.array([t[2:] for t in pw], dtype=np.float64).reshape(-1, 4)
        return cls(u, edges, table)

    def is_submodular(self) -> np.ndarray:
        t = self.table
        return t[:, 1] + t[:, 2] >= t[:, 0] + t[:, 3]


def energy_of(e: BinaryEnergy, x) -> float:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (e.n_vars,):
        raise DimensionError(f"assignment of length {x.size} for {e.n_vars} variables")
    un = e.unary[np.arange(e.n_vars), x].sum()
    if e.edges.size == 0:
        return float(un)
    pw = e.table[np.arange(e.edges.shape[0]), 2 * x[e.edges[:, 0]] + x[e.edges[:, 1]]].sum()
    return float(un + pw)


@dataclass(frozen=True, eq=False)
class PartialLabeling:
    values: np.ndarray  # int8, 0 / 1 / UNLABELED

    @property
    def labeled(self) -> np.ndarray:
        return self.values != UNLABELED

    @property
    def n_unlabeled(self) -> int:
        return int(np.count_nonzero(self.values == UNLABELED))

    def __len__(self):
        return self.values.size


def solve_qpbo(e: BinaryEnergy) -> PartialLabeling:
    n = e.n_vars
    if n == 0:
        return PartialLabeling(np.zeros(0, dtype=np.int8))
    d1 = e.unary[:, 1] - e.unary[:, 0]  # cost of x=1 relative to x=0
    g = FlowGraph(2 * n)
    nonsub_vars = np.zeros(n, dtype=bool)

    if e.edges.size:
        u, v = e.edges[:, 0], e.edges[:, 1]
        A, B, C, D = e.table.T
        w = B + C - A - D
        sub = w >= 0
        # submodular: k + a_u x_u + a_v x_v + w/2 [(1-x_u) x_v + x_u (1-x_v)]
        s_u, s_v, half = u[sub], v[sub], w[sub] / 2
        np.add.at(d1, s_u, C[sub] - A[sub] - half)
        np.add.at(d1, s_v, B[sub] - A[sub] - half)
        g.add_arcs(s_u, s_v, half, half)
        g.add_arcs(n + s_v, n + s_u, half, half)
        # supermodular: k + a_u x_u + a_v x_v + w'/2 [(1-x_u)(1-x_v) + x_u x_v]
        ns = ~sub
        n_u, n_v, half = u[ns], v[ns], -w[ns] / 2
        k = (A[ns] + B[ns] + C[ns] - D[ns]) / 2
        np.add.at(d1, n_u, C[ns] - k)
        np.add.at(d1, n_v, B[ns] - k)
        g.add_arcs(n_u, n + n_v, half, 0.0)   # x_u = x_v = 0
        g.add_arcs(n_v, n + n_u, half, 0.0)
        g.add_arcs(n + n_u, n_v, half, 0.0)   # x_u = x_v = 1
        g.add_arcs(n + n_v, n_u, half, 0.0)
        nonsub_vars[n_u] = True
        nonsub_vars[n_v] = True

    pos, neg = np.maximum(d1, 0.0), np.maximum(-d1, 0.0)
    idx = np.arange(n)
    g.add_terminals(idx, pos, neg)        # p: cut s->p when x=1, p->t when x=0
    g.add_terminals(n + idx, neg, pos)    # p_bar mirrors
    _, side = g.solve()

    in_p, in_pbar = side[:n], side[n:]
    x = np.full(n, UNLABELED, dtype=np.int8)
    x[in_p & ~in_pbar] = 0
    x[in_pbar & ~in_p] = 1

    # Components of the interaction graph without non-submodular terms live in
    # one copy only; the source-reachable set there is already a min cut.
    free = x == UNLABELED
    if free.any():
        if e.edges.size:
            adj = coo_matrix((np.ones(e.edges.shape[0]), (e.edges[:, 0], e.edges[:, 1])), shape=(n, n))
            _, comp = connected_components(adj, directed=False)
            bad = np.zeros(comp.max() + 1, dtype=bool)
            bad[comp[nonsub_vars]] = True
            fix = free & ~bad[comp]
        else:
            fix = free
        x[fix] = np.where(in_p[fix], 0, 1)
    return PartialLabeling(x)
