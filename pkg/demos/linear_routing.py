"""CNOT cost of every p-shell pool operator, all-to-all versus a linear chain."""

from collections import Counter

from shellvqe import build_pool, build_valence_space
from shellvqe.circuits import synthesize_exponential

space = build_valence_space("p", "both")
n = space.n_qubits
rows = []
for op in build_pool(space):
    full = synthesize_exponential(op, 0.1, n)
    lin = synthesize_exponential(op, 0.1, n, "linear")
    rows.append((op, full.cnots, lin.circuit.fswap_count))

print(f"{len(rows)} operators on {n} qubits")
print("CNOTs per layer (all-to-all):", dict(sorted(Counter(r[1] for r in rows).items())))
print("FSWAPs per layer (linear):   ", dict(sorted(Counter(r[2] for r in rows).items())))
worst = max(rows, key=lambda r: r[2])
print(f"most routing: {worst[0]} needs {worst[2]} FSWAPs (bound {4 * (n - 4)})")
