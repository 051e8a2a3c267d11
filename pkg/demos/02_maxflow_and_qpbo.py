"""The two solvers underneath inference: max-flow and roof duality."""
import numpy as np

from patchfuse.maxflow import FlowGraph
from patchfuse.qpbo import BinaryEnergy, energy_of, solve_qpbo

# %% a four-node graph: s -> 0 -> 1 -> t with a side branch through 2 and 3
g = FlowGraph(4)
g.add_terminal(0, 5, 0)
g.add_terminal(2, 4, 0)
g.add_terminal(1, 0, 3)
g.add_terminal(3, 0, 6)
g.add_arc(0, 1, 4)
g.add_arc(2, 3, 2)
g.add_arc(0, 3, 1)
flow, source_side = g.solve()
print("max flow:", flow)
print("source side of the min cut:", np.flatnonzero(source_side).tolist())

# %% a frustrated triangle: every edge wants its endpoints to differ
ring = [(0, 1, 1.0, 0.0, 0.0, 1.0), (1, 2, 1.0, 0.0, 0.0, 1.0), (0, 2, 1.0, 0.0, 0.0, 1.0)]
e = BinaryEnergy.from_terms(3, {}, ring)
print("submodular edges:", e.is_submodular().tolist())
print("labels (-1 = undecided):", solve_qpbo(e).values.tolist())

# %% drop one edge and the "differ" constraints no longer conflict:
# still not submodular, but roof duality now decides every variable
chain = ring[:2]
e = BinaryEnergy.from_terms(3, {0: (0.0, 0.5)}, chain)
x = solve_qpbo(e).values
best = min(energy_of(e, [a, b, c]) for a in (0, 1) for b in (0, 1) for c in (0, 1))
print("submodular edges:", e.is_submodular().tolist())
print("labels:", x.tolist(), f"energy {energy_of(e, x):.2f}, brute-force minimum {best:.2f}")
