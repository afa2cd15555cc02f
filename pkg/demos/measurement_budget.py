"""How many circuits does one energy evaluation need, and what does noise do?

Part 1 tabulates the measurement circuits per valence space. Part 2 samples
the energy of an exact ground state with and without symmetry filtering
under a 2% readout bit-flip rate.
"""

import numpy as np

from shellvqe import build_valence_space, count_measurement_circuits, enumerate_m_basis, measurement_plan
from shellvqe.fock import build_sparse_h, embed, ground_state
from shellvqe.hamiltonian import decouple_to_mscheme, random_interaction
from shellvqe.sampling import MitigationPolicy, ShotPlan, SymmetryTargets, required_circuit_budget, sample_energy

print(f"{'space':<14}{'N_qb':>5}{'N_h':>6}{'N_hh':>7}{'grouped':>9}{'N_tot':>7}")
for shell in ("p", "sd", "pf"):
    for species in ("neutrons", "both"):
        c = count_measurement_circuits(build_valence_space(shell, species))
        print(f"{shell + '/' + species:<14}{c.n_qubits:>5}{c.n_h:>6}{c.n_hh:>7}{c.n_hh_grouped:>9}{c.n_tot:>7}")

space = build_valence_space("p", "both")
print("\nbudget for 1000 shots, 30 layers x 40 calls:",
      required_circuit_budget(space, [40] * 30, 1000), "executions")

h = decouple_to_mscheme(*random_interaction(space, np.random.default_rng(1)), space)
basis = enumerate_m_basis(space, 2, 2, 0)
gs = ground_state(build_sparse_h(h, basis))
psi = embed(gs.coefficients, basis, space.n_qubits)
plan = ShotPlan(2000, measurement_plan(h), seed=7)
targets = SymmetryTargets(space, 2, 2, 0)

print(f"\nexact E = {gs.energy:.5f}")
for mode in ("off", "number", "number+mtz"):
    r = sample_energy(psi, plan, MitigationPolicy.from_mode(mode), targets, bitflip_rate=0.02)
    print(f"{mode:<11} E = {r.energy:.5f} +- {r.std_error:.5f}   discarded {r.discard_fraction:.1%}")
