"""Long-running reproduction of the larger benchmark nuclei.

Needs interaction files that are not shipped with the package:

    python3 demos/benchmark_nuclei.py usdb.int 20Ne
    python3 demos/benchmark_nuclei.py kb3g.int 44Ca --max-layers 300

The sd-shell cases finish in minutes to hours; pf-shell nuclei beyond two
valence particles need very large statevectors and can take days.
"""

import argparse
import logging

from shellvqe import AdaptConfig, build_valence_space, load_hamiltonian, run_adapt
from shellvqe.valence import default_species, parse_nucleus

ap = argparse.ArgumentParser()
ap.add_argument("interaction")
ap.add_argument("nucleus")
ap.add_argument("--max-layers", type=int, default=200)
ap.add_argument("--eps", type=float, default=1e-6)
args = ap.parse_args()
logging.basicConfig(level=logging.INFO, format="%(message)s")

shell, n, z = parse_nucleus(args.nucleus)
space = build_valence_space(shell, default_species(n, z))
h = load_hamiltonian(args.interaction, space)
res = run_adapt(AdaptConfig(space, n, z, (n + z) % 2, h, max_layers=args.max_layers, eps_target=args.eps))
print(f"{args.nucleus}: N_SD {len(res.basis)}, {res.n_layers} layers, "
      f"E = {res.energy:.6f} (exact {res.exact_energy:.6f}), CNOT {res.traces[-1].n_cnot_total}")
