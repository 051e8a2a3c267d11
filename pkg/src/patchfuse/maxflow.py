"""s-t max-flow / min-cut on sparse graphs.

Boykov-Kolmogorov augmenting paths with search-tree reuse (two trees grown
from the terminals, orphan adoption with timestamp/distance marks). Arcs are
stored in CSR order with paired residual sisters. Capacities are floats;
residuals at or below ``EPS`` count as saturated.
"""
from __future__ import annotations

import numpy as np
from numba import njit

EPS = 1e-12

_NONE = -1
_TERMINAL = -2
_ORPHAN = -3
_INF_D = 1 << 60


class NegativeCapacity(ValueError):
    pass


class BadIndex(IndexError):
    pass


@njit(cache=True)
def _origin_distance(j, parent, head, ts, dist, time):
    """Distance from j to its terminal, or _INF_D if j hangs off an orphan."""
    d = 0
    y = j
    while True:
        if ts[y] == time:
            d += dist[y]
            break
        pa = parent[y]
        d += 1
        if pa == _TERMINAL:
            ts[y] = time
            dist[y] = 1
            break
        if pa < 0:  # orphan (free nodes never get here)
            return _INF_D
        y = head[pa]
    # stamp the verified path
    dd = d
    y = j
    while ts[y] != time:
        ts[y] = time
        dist[y] = dd
        dd -= 1
        y = head[parent[y]]
    return d


@njit(cache=True)
def _bk_maxflow(first, head, sister, rcap, trcap, eps):
    n = trcap.shape[0]
    parent = np.full(n, _NONE, dtype=np.int64)
    is_sink = np.zeros(n, dtype=np.bool_)
    ts = np.zeros(n, dtype=np.int64)
    dist = np.zeros(n, dtype=np.int64)
    in_q = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n + 1, dtype=np.int64)
    qhead = 0
    qlen = 0
    orphans = np.empty(n + 1, dtype=np.int64)
    n_orph = 0
    flow = 0.0

    for i in range(n):
        if trcap[i] > eps:
            parent[i] = _TERMINAL
            dist[i] = 1
            queue[(qhead + qlen) % (n + 1)] = i
            qlen += 1
            in_q[i] = True
        elif trcap[i] < -eps:
            parent[i] = _TERMINAL
            is_sink[i] = True
            dist[i] = 1
            queue[(qhead + qlen) % (n + 1)] = i
            qlen += 1
            in_q[i] = True

    time = 0
    current = -1
    while True:
        i = current
        if i >= 0 and parent[i] == _NONE:
            i = -1
        if i < 0:
            while qlen > 0:
                i = queue[qhead]
                qhead = (qhead + 1) % (n + 1)
                qlen -= 1
                in_q[i] = False
                if parent[i] != _NONE:
                    break
                i = -1
            if i < 0:
                break
        current = -1

        # grow the tree of i
        found = -1
        si = is_sink[i]
        for a in range(first[i], first[i + 1]):
            c = rcap[sister[a]] if si else rcap[a]
            if c > eps:
                j = head[a]
                if parent[j] == _NONE:
                    is_sink[j] = si
                    parent[j] = sister[a]
                    ts[j] = ts[i]
                    dist[j] = dist[i] + 1
                    if not in_q[j]:
                        queue[(qhead + qlen) % (n + 1)] = j
                        qlen += 1
                        in_q[j] = True
                elif is_sink[j] != si:
                    found = a
                    break
                elif ts[j] <= ts[i] and dist[j] > dist[i]:
                    parent[j] = sister[a]
                    ts[j] = ts[i]
                    dist[j] = dist[i] + 1

        time += 1
        if found < 0:
            continue
        current = i

        # augment along source-root .. m .. sink-root
        m = sister[found] if si else found
        u = head[sister[m]]
        v = head[m]
        b = rcap[m]
        x = u
        while True:
            pa = parent[x]
            if pa == _TERMINAL:
                if trcap[x] < b:
                    b = trcap[x]
                break
            if rcap[sister[pa]] < b:
                b = rcap[sister[pa]]
            x = head[pa]
        x = v
        while True:
            pa = parent[x]
            if pa == _TERMINAL:
                if -trcap[x] < b:
                    b = -trcap[x]
                break
            if rcap[pa] < b:
                b = rcap[pa]
            x = head[pa]

        rcap[m] -= b
        rcap[sister[m]] += b
        x = u
        while True:
            pa = parent[x]
            if pa == _TERMINAL:
                trcap[x] -= b
                if trcap[x] <= eps:
                    parent[x] = _ORPHAN
                    orphans[n_orph] = x
                    n_orph += 1
                break
            rcap[pa] += b
            rcap[sister[pa]] -= b
            nxt = head[pa]
            if rcap[sister[pa]] <= eps:
                parent[x] = _ORPHAN
                orphans[n_orph] = x
                n_orph += 1
            x = nxt
        x = v
        while True:
            pa = parent[x]
            if pa == _TERMINAL:
                trcap[x] += b
                if trcap[x] >= -eps:
                    parent[x] = _ORPHAN
                    orphans[n_orph] = x
                    n_orph += 1
                break
            rcap[sister[pa]] += b
            rcap[pa] -= b
            nxt = head[pa]
            if rcap[pa] <= eps:
                parent[x] = _ORPHAN
                orphans[n_orph] = x
                n_orph += 1
            x = nxt
        flow += b

        # adopt orphans
        time += 1
        while n_orph > 0:
            n_orph -= 1
            x = orphans[n_orph]
            sx = is_sink[x]
            d_min = _INF_D
            a0 = -1
            for a in range(first[x], first[x + 1]):
                j = head[a]
                if is_sink[j] != sx or parent[j] == _NONE:
                    continue
                c = rcap[a] if sx else rcap[sister[a]]
                if c <= eps:
                    continue
                d = _origin_distance(j, parent, head, ts, dist, time)
                if d < d_min:
                    d_min = d
                    a0 = a
            if a0 >= 0:
                parent[x] = a0
                ts[x] = time
                dist[x] = d_min + 1
                continue
            for a in range(first[x], first[x + 1]):
                j = head[a]
                if is_sink[j] != sx or parent[j] == _NONE:
                    continue
                c = rcap[a] if sx else rcap[sister[a]]
                if c > eps and not in_q[j]:
                    queue[(qhead + qlen) % (n + 1)] = j
                    qlen += 1
                    in_q[j] = True
                pj = parent[j]
                if pj >= 0 and head[pj] == x:
                    parent[j] = _ORPHAN
                    orphans[n_orph] = j
                    n_orph += 1
            parent[x] = _NONE
    return flow


@njit(cache=True)
def _build_csr(n, us, vs, cuv, cvu):
    """Counting-sort arcs by tail; arc 2i is us[i]->vs[i], 2i+1 its reverse."""
    m = us.shape[0]
    first = np.zeros(n + 1, dtype=np.int64)
    for i in range(m):
        first[us[i] + 1] += 1
        first[vs[i] + 1] += 1
    for i in range(n):
        first[i + 1] += first[i]
    fill = first[:-1].copy()
    head = np.empty(2 * m, dtype=np.int64)
    rcap = np.empty(2 * m, dtype=np.float64)
    sister = np.empty(2 * m, dtype=np.int64)
    for i in range(m):
        a = fill[us[i]]
        fill[us[i]] += 1
        b = fill[vs[i]]
        fill[vs[i]] += 1
        head[a] = vs[i]
        rcap[a] = cuv[i]
        head[b] = us[i]
        rcap[b] = cvu[i]
        sister[a] = b
        sister[b] = a
    return first, head, sister, rcap


@njit(cache=True)
def _reachable_from_source(first, head, rcap, trcap, eps):
    n = trcap.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n + 1, dtype=np.int64)
    top = 0
    for i in range(n):
        if trcap[i] > eps:
            seen[i] = True
            stack[top] = i
            top += 1
    while top > 0:
        top -= 1
        i = stack[top]
        for a in range(first[i], first[i + 1]):
            j = head[a]
            if not seen[j] and rcap[a] > eps:
                seen[j] = True
                stack[top] = j
                top += 1
    return seen


class FlowGraph:
    """Directed graph with terminal links; capacities accumulate over calls."""

    def __init__(self, n_nodes: int):
        if n_nodes < 0:
            raise ValueError("n_nodes must be >= 0")
        self.n_nodes = int(n_nodes)
        self.cap_source = np.zeros(self.n_nodes)
        self.cap_sink = np.zeros(self.n_nodes)
        self._arcs: list[tuple[np.ndarray, ...]] = []

    def _check_nodes(self, nodes):
        nodes = np.asarray(nodes, dtype=np.int64)
        if nodes.size and (nodes.min() < 0 or nodes.max() >= self.n_nodes):
            raise BadIndex(f"node index out of range 0..{self.n_nodes - 1}")
        return nodes

    @staticmethod
    def _check_caps(*caps):
        out = []
        for c in caps:
            c = np.asarray(c, dtype=np.float64)
            if c.size and (not np.all(np.isfinite(c)) or c.min() < 0):
                raise NegativeCapacity("capacities must be finite and >= 0")
            out.append(c)
        return out

    def add_terminal(self, node: int, cap_source: float, cap_sink: float) -> None:
        self.add_terminals([node], [cap_source], [cap_sink])

    def add_terminals(self, nodes, cap_source, cap_sink) -> None:
        nodes = self._check_nodes(nodes)
        cs, ct = self._check_caps(cap_source, cap_sink)
        np.add.at(self.cap_source, nodes, np.broadcast_to(cs, nodes.shape))
        np.add.at(self.cap_sink, nodes, np.broadcast_to(ct, nodes.shape))

    def add_arc(self, u: int, v: int, cap_uv: float, cap_vu: float = 0.0) -> None:
        self.add_arcs([u], [v], [cap_uv], [cap_vu])

    def add_arcs(self, us, vs, cap_uv, cap_vu) -> None:
        us, vs = self._check_nodes(us), self._check_nodes(vs)
        if us.shape != vs.shape:
            raise ValueError("endpoint arrays differ in length")
        cuv, cvu = self._check_caps(cap_uv, cap_vu)
        cuv = np.broadcast_to(cuv, us.shape).astype(np.float64)
        cvu = np.broadcast_to(cvu, us.shape).astype(np.float64)
        keep = us != vs  # self-loops never cross a cut
        self._arcs.append((us[keep], vs[keep], cuv[keep], cvu[keep]))

    def _csr(self):
        if self._arcs:
            us, vs, cuv, cvu = (np.concatenate(x) for x in zip(*self._arcs))
        else:
            us = vs = np.zeros(0, dtype=np.int64)
            cuv = cvu = np.zeros(0)
        return _build_csr(self.n_nodes, us.astype(np.int64), vs.astype(np.int64),
                          cuv.astype(np.float64), cvu.astype(np.float64))

    def solve(self) -> tuple[float, np.ndarray]:
        """Max-flow value and the min cut as a boolean source-side mask.

        Source side = nodes reachable from the source in the final residual graph.
        """
        first, head, sister, rcap = self._csr()
        base = np.minimum(self.cap_source, self.cap_sink)
        trcap = self.cap_source - self.cap_sink
        flow = float(base.sum())
        if self.n_nodes:
            flow += _bk_maxflow(first, head, sister, rcap, trcap, EPS)
        side = _reachable_from_source(first, head, rcap, trcap, EPS)
        return flow, side
