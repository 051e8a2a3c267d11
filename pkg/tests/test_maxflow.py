import numpy as np
import pytest
from oracles import brute_min_cut

from patchfuse.maxflow import BadIndex, FlowGraph, NegativeCapacity


def test_terminal_caps_accumulate():
    g = FlowGraph(1)
    g.add_terminal(0, 2.0, 0.0)
    g.add_terminal(0, 2.0, 0.0)
    assert g.cap_source[0] == 4.0


def test_invalid_inputs():
    g = FlowGraph(2)
    with pytest.raises(NegativeCapacity):
        g.add_arc(0, 1, -1.0)
    with pytest.raises(NegativeCapacity):
        g.add_terminal(0, np.nan, 0.0)
    with pytest.raises(BadIndex):
        g.add_arc(0, 2, 1.0)


def test_chain_example():
    g = FlowGraph(2)
    g.add_terminal(0, 3.0, 0.0)
    g.add_arc(0, 1, 1.0, 0.0)
    g.add_terminal(1, 0.0, 5.0)
    flow, side = g.solve()
    assert flow == 1.0
    assert side.tolist() == [True, False]


def test_isolated_node():
    g = FlowGraph(1)
    g.add_terminal(0, 2.0, 3.0)
    flow, side = g.solve()
    assert flow == 2.0 == brute_min_cut(1, [(0, 2.0, 3.0)], [])
    assert side.tolist() == [False]


def test_empty_graph():
    assert FlowGraph(0).solve()[0] == 0.0


def _random_graph(rng, n, float_caps=False):
    terms, arcs = [], []
    for i in range(n):
        terms.append((i, *(rng.uniform(0, 8, 2) if float_caps else rng.integers(0, 9, 2))))
    for _ in range(int(rng.integers(0, 3 * n + 1))):
        u, v = rng.integers(0, n, 2)
        caps = rng.uniform(0, 8, 2) if float_caps else rng.integers(0, 9, 2)
        arcs.append((int(u), int(v), *caps))
    return terms, arcs


def _build(n, terms, arcs, order=None):
    g = FlowGraph(n)
    for i, cs, ct in terms:
        g.add_terminal(i, cs, ct)
    for k in (order if order is not None else range(len(arcs))):
        g.add_arc(*arcs[k])
    return g


def _cut_value(side, terms, arcs):
    c = sum(ct if side[i] else cs for i, cs, ct in terms)
    for u, v, cuv, cvu in arcs:
        if u != v:
            c += cuv if side[u] and not side[v] else 0
            c += cvu if side[v] and not side[u] else 0
    return c


def test_float_graphs_match_oracle_and_cut_is_minimal(rng):
    for _ in range(150):
        n = int(rng.integers(1, 9))
        terms, arcs = _random_graph(rng, n, float_caps=True)
        flow, side = _build(n, terms, arcs).solve()
        best = brute_min_cut(n, terms, arcs)
        assert abs(flow - best) <= 1e-9
        assert abs(_cut_value(side, terms, arcs) - flow) <= 1e-9


def test_insertion_order_irrelevant(rng):
    for _ in range(50):
        n = int(rng.integers(2, 9))
        terms, arcs = _random_graph(rng, n)
        f1, _ = _build(n, terms, arcs).solve()
        f2, _ = _build(n, terms, arcs, order=rng.permutation(len(arcs))).solve()
        assert f1 == f2


def test_grid_against_scipy(rng):
    # independent integer max-flow on a 40x40 grid
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_flow

    H = W = 40
    n = H * W
    g = FlowGraph(n)
    cs = rng.integers(0, 20, n)
    ct = rng.integers(0, 20, n)
    g.add_terminals(np.arange(n), cs, ct)
    idx = np.arange(n).reshape(H, W)
    u = np.concatenate([idx[:, :-1].ravel(), idx[:-1].ravel()])
    v = np.concatenate([idx[:, 1:].ravel(), idx[1:].ravel()])
    cuv, cvu = rng.integers(0, 10, u.size), rng.integers(0, 10, u.size)
    g.add_arcs(u, v, cuv, cvu)
    flow, _ = g.solve()
    S, T = n, n + 1
    rows = np.concatenate([np.full(n, S), np.arange(n), u, v])
    cols = np.concatenate([np.arange(n), np.full(n, T), v, u])
    data = np.concatenate([cs, ct, cuv, cvu]).astype(np.int32)
    m = csr_matrix((data, (rows, cols)), shape=(n + 2, n + 2))
    m.sum_duplicates()
    assert flow == maximum_flow(m, S, T).flow_value
