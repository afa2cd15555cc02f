"""Two protons in the p shell with a pairing force.

Prints the layer-by-layer trace of an ADAPT-VQE run and the final state in
the m-scheme basis. Runs in about a second.
"""

from shellvqe import AdaptConfig, build_valence_space, run_adapt
from shellvqe.hamiltonian import decouple_to_mscheme, pairing_interaction

space = build_valence_space("p", "both")
h = decouple_to_mscheme(*pairing_interaction(space, 1.0, [0.0, 1.0]), space)

result = run_adapt(AdaptConfig(space, n_ci=0, z_ci=2, M2=0, hamiltonian=h))
print(f"{len(result.basis)} determinants, exact E = {result.exact_energy:.8f}")
print(f"reference |{result.state.reference.bitstring}>")
for t in result.traces:
    print(f"layer {t.layer}  op {t.selected_op}  E = {t.energy:.8f}  eps = {t.eps_E:.1e}  CNOT = {t.n_cnot_total}")
print("stopped:", result.stop_reason)

for det, c in zip(result.basis, result.coefficients):
    if abs(c) > 1e-6:
        print(f"  {det.bitstring}  {c.real:+.6f}")
