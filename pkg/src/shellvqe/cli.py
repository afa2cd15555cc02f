"""Command-line entry point: ``shellvqe {run,counts,dims,verify}``.

Exit codes: 0 ok, 1 failed verification, 2 configuration error,
3 resource limit, 4 solver/optimizer/estimator failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import adapt, fock, measurement, qsim, sampling
from .circuits import ansatz_circuit
from .errors import ConfigurationError, ResourceError, ShellVQEError
from .hamiltonian import decouple_to_mscheme, load_hamiltonian, pairing_interaction, random_interaction
from .valence import (
    SHELLS,
    SlaterDet,
    build_valence_space,
    default_species,
    dim_mb,
    enumerate_m_basis,
    load_orbital_file,
    parse_nucleus,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_RESOURCE, EXIT_SOLVER = 0, 1, 2, 3, 4

TRACE_COLUMNS = ("layer", "op", "grad", "energy", "eps_E", "infidelity", "mean_entropy_err", "n_cnot", "n_fc")

log = logging.getLogger("shellvqe")


@dataclasses.dataclass
class RunConfig:
    shell: str | None = None
    nucleus: str | None = None
    n_ci: int | None = None
    z_ci: int | None = None
    J2: int | None = None
    M2: int | None = None
    species: str | None = None
    orbitals: str | None = None
    interaction: str = "pairing"
    normalized: bool = True
    backend: str = "matrix"
    connectivity: str = "all"
    max_layers: int = 100
    eps_target: float | None = None
    grad_tol: float = adapt.GRAD_TOL
    reference: str | None = None
    shots: int | None = None
    mitigation: str = "off"
    bitflip_rate: float = 0.0
    grouped: bool = True
    seed: int = 0
    output: str = "shellvqe-out"
    fd_check: bool = True
    resume: bool = False
    dump_matrix: str | None = None
    dump_statevector: str | None = None
    dump_circuit: str | None = None
    tallies: str | None = None

    def resolve(self) -> RunConfig:
        """Fill nucleus-derived fields and validate; returns self."""
        if self.nucleus:
            shell, n, z = parse_nucleus(self.nucleus, None if self.orbitals else self.shell)
            if not self.orbitals:
                self.shell = shell
            self.n_ci = n if self.n_ci is None else self.n_ci
            self.z_ci = z if self.z_ci is None else self.z_ci
        if self.n_ci is None or self.z_ci is None:
            raise ConfigurationError("give a nucleus label or both n_ci and z_ci")
        if self.n_ci < 0 or self.z_ci < 0:
            raise ConfigurationError("particle numbers must be non-negative")
        if self.shell is None:
            self.shell = "p"
        if not self.orbitals and self.shell not in SHELLS:
            raise ConfigurationError(f"unknown shell {self.shell!r}")
        if self.species is None:
            self.species = default_species(self.n_ci, self.z_ci)
        if self.M2 is None:
            # J2 selects the stretched state; otherwise the lowest |M| (0 or 1/2)
            self.M2 = self.J2 if self.J2 is not None else (self.n_ci + self.z_ci) % 2
        if self.J2 is not None and (self.J2 - self.M2) % 2:
            raise ConfigurationError("J2 and M2 must have the same parity")
        if (self.M2 - self.n_ci - self.z_ci) % 2:
            raise ConfigurationError("M2 parity does not match the particle number")
        if self.eps_target is not None and self.eps_target <= 0:
            raise ConfigurationError("eps_target must be positive")
        if self.max_layers < 0:
            raise ConfigurationError("max_layers must be non-negative")
        if self.backend not in adapt.BACKENDS:
            raise ConfigurationError(f"backend must be one of {adapt.BACKENDS}")
        if self.connectivity not in ("all", "linear"):
            raise ConfigurationError("connectivity must be 'all' or 'linear'")
        if self.mitigation not in sampling.MITIGATION_MODES:
            raise ConfigurationError(f"mitigation must be one of {sampling.MITIGATION_MODES}")
        if self.shots is not None and self.shots < 1:
            raise ConfigurationError("shots must be positive")
        if not 0.0 <= self.bitflip_rate <= 1.0:
            raise ConfigurationError("bitflip_rate must lie in [0, 1]")
        if self.tallies and not self.shots:
            raise ConfigurationError("tallies need shots")
        return self


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, value: str):
    kind = _FIELD_TYPES[key]
    if value.lower() in ("none", "null", ""):
        if "None" not in kind:
            raise ConfigurationError(f"{key} cannot be empty")
        return None
    if kind.startswith("bool"):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"{key}: expected a boolean, got {value!r}")
    try:
        if kind.startswith("int"):
            return int(value)
        if kind.startswith("float"):
            return float(value)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot convert {value!r}") from None
    return value


def read_config_file(path) -> dict:
    """``key = value`` lines, ``#`` comments."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


# ---------------------------------------------------------------------------
# setup helpers
# ---------------------------------------------------------------------------


def make_space(cfg: RunConfig):
    if cfg.orbitals:
        return load_orbital_file(cfg.orbitals, cfg.species)
    return build_valence_space(cfg.shell, cfg.species)


def make_hamiltonian(cfg: RunConfig, space):
    spec = cfg.interaction
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        ref = resources.files("shellvqe") / "data" / f"{name}.int"
        if not ref.is_file():
            raise ConfigurationError(f"no built-in interaction {name!r}")
        with resources.as_file(ref) as path:
            return load_hamiltonian(path, space, cfg.normalized)
    if spec.startswith("pairing"):
        strength = float(spec.split(":", 1)[1]) if ":" in spec else 1.0
        spe = [float(k) for k in range(len(space.orbitals))]
        return decouple_to_mscheme(*pairing_interaction(space, strength, spe), space)
    if spec.startswith("random"):
        seed = int(spec.split(":", 1)[1]) if ":" in spec else cfg.seed
        return decouple_to_mscheme(*random_interaction(space, np.random.default_rng(seed)), space)
    if not Path(spec).is_file():
        raise ConfigurationError(f"interaction file {spec!r} not found")
    return load_hamiltonian(spec, space, cfg.normalized)


def _parse_reference(bits: str | None, space) -> SlaterDet | None:
    if bits is None:
        return None
    if len(bits) != space.n_qubits or set(bits) - {"0", "1"}:
        raise ConfigurationError(f"reference must be a {space.n_qubits}-character 0/1 string")
    return SlaterDet.from_bitstring(bits)


def _check_capacity(cfg: RunConfig, space) -> None:
    for count, tz, name in ((cfg.n_ci, 1, "neutrons"), (cfg.z_ci, -1, "protons")):
        room = len(space.qubits_of(tz))
        if count > room:
            raise ConfigurationError(f"{count} valence {name} exceed the {room} available states")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x))


def write_traces(out: Path, rows: list[dict]) -> None:
    """trace.jsonl (every LayerTrace field) and trace.csv (fixed columns)."""
    with open(out / "trace.jsonl", "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, default=_jsonable) + "\n")
    with open(out / "trace.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in rows:
            op = "" if r["selected_op"] is None else " ".join(map(str, r["selected_op"]))
            w.writerow([
                r["layer"], op, repr(r["max_gradient"]), repr(r["energy"]), repr(r["eps_E"]),
                repr(r["infidelity"]), repr(r["mean_entropy_error"]), r["n_cnot_total"], r["n_fc"],
            ])


def read_trace_rows(path: Path) -> list[dict]:
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def validate_summary(summary: dict) -> None:
    import jsonschema

    schema = json.loads((resources.files("shellvqe") / "data" / "summary.schema.json").read_text(encoding="utf-8"))
    jsonschema.validate(summary, schema)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_run(cfg: RunConfig) -> int:
    cfg.resolve()
    space = make_space(cfg)
    _check_capacity(cfg, space)
    if cfg.backend == "circuit" or cfg.dump_statevector or cfg.shots:
        qsim.check_size(space.n_qubits)
    h = make_hamiltonian(cfg, space)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "checkpoint.bin"
    resume = adapt.load_checkpoint(ckpt) if cfg.resume and ckpt.exists() else None
    if resume and resume.reference.n_qubits != space.n_qubits:
        raise ConfigurationError("checkpoint does not match this valence space")

    acfg = adapt.AdaptConfig(
        space, cfg.n_ci, cfg.z_ci, cfg.M2, h,
        backend=cfg.backend, connectivity=cfg.connectivity, max_layers=cfg.max_layers,
        eps_target=cfg.eps_target, grad_tol=cfg.grad_tol,
        reference=_parse_reference(cfg.reference, space), fd_check=cfg.fd_check,
    )
    result = adapt.run_adapt(acfg, resume, callback=lambda st, tr: adapt.save_checkpoint(ckpt, st))
    rows = [tr.as_dict() for tr in result.traces]
    if resume:
        earlier = [r for r in read_trace_rows(out / "trace.jsonl") if r["layer"] <= rows[0]["layer"]]
        if earlier and earlier[-1]["layer"] == rows[0]["layer"]:
            rows = rows[1:]  # keep the row recorded when that layer was first optimized
        rows = earlier + rows
    write_traces(out, rows)

    basis = result.basis
    if cfg.dump_matrix:
        fock.build_sparse_h(h, basis).dump(cfg.dump_matrix)
    state = result.state
    circuit = ansatz_circuit(state.reference, state.ops, state.thetas, cfg.connectivity)
    if cfg.dump_circuit:
        Path(cfg.dump_circuit).write_text(circuit.to_text(), encoding="utf-8")
    full = None
    if cfg.dump_statevector or cfg.shots:
        full = qsim.apply(circuit, qsim.zero_state(space.n_qubits))
    if cfg.dump_statevector:
        qsim.dump_statevector(cfg.dump_statevector, full)

    counts = measurement.count_measurement_circuits(space)
    last = result.traces[-1]
    summary = {
        "nucleus": {
            "label": cfg.nucleus, "shell": "custom" if cfg.orbitals else cfg.shell, "species": space.species,
            "n_ci": cfg.n_ci, "z_ci": cfg.z_ci, "M2": cfg.M2,
        },
        "n_qubits": space.n_qubits,
        "dim_sp": space.dim_sp,
        "dim_mb": dim_mb(space, cfg.n_ci, cfg.z_ci),
        "n_sd": len(basis),
        "reference": state.reference.bitstring,
        "final_energy": last.energy,
        "exact_energy": result.exact_energy,
        "eps_E": last.eps_E,
        "infidelity": last.infidelity,
        "layers": result.n_layers,
        "n_cnot": last.n_cnot_total,
        "stop_reason": result.stop_reason,
        "ops": [list(op) for op in state.ops],
        "thetas": list(state.thetas),
        "measurement_circuits": {
            "n_h": counts.n_h, "n_hh": counts.n_hh, "n_hh_grouped": counts.n_hh_grouped,
            "n_tot": counts.n_tot, "n_tot_grouped": counts.n_tot_grouped,
        },
        "sampling": None,
        "config": dataclasses.asdict(cfg),
    }
    if cfg.shots:
        plan = measurement.measurement_plan(h, cfg.grouped)
        targets = sampling.SymmetryTargets(space, cfg.n_ci, cfg.z_ci, cfg.M2)
        res = sampling.sample_energy(
            full, sampling.ShotPlan(cfg.shots, plan, cfg.seed), sampling.MitigationPolicy.from_mode(cfg.mitigation),
            targets, cfg.bitflip_rate, record_tallies=bool(cfg.tallies),
        )
        if cfg.tallies:
            res.write_tallies(cfg.tallies, space.n_qubits)
        summary["sampling"] = {
            "shots_per_circuit": cfg.shots, "seed": cfg.seed, "mitigation": cfg.mitigation,
            "energy": res.energy, "std_error": res.std_error, "discard_fraction": res.discard_fraction,
            "circuits": len(plan),
            "budget": sampling.required_circuit_budget(len(plan), [t.n_fc for t in result.traces[1:]], cfg.shots),
        }
    validate_summary(summary)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=_jsonable) + "\n", encoding="utf-8")
    print(
        f"{result.n_layers} layers  E = {last.energy:.10f}  E_exact = {result.exact_energy:.10f}  "
        f"eps_E = {last.eps_E:.3e}  CNOT = {last.n_cnot_total}  ({result.stop_reason})"
    )
    return EXIT_OK


def cmd_counts(shell: str, species: str, out=None) -> measurement.CircuitCounts:
    out = out or sys.stdout
    space = build_valence_space(shell, species)
    c = measurement.count_measurement_circuits(space)
    print(f"{'N_qb':>5} {'N_h':>5} {'N_hh':>6} {'grouped':>8} {'N_tot':>6}", file=out)
    print(f"{c.n_qubits:>5} {c.n_h:>5} {c.n_hh:>6} {c.n_hh_grouped:>8} {c.n_tot:>6}", file=out)
    return c


def cmd_dims(shell: str, n_ci: int, z_ci: int, M2: int, out=None) -> tuple[int, int, int]:
    out = out or sys.stdout
    full = build_valence_space(shell, "both")
    dsp = full.dim_sp
    dmb = dim_mb(full, n_ci, z_ci)
    n_sd = len(enumerate_m_basis(full, n_ci, z_ci, M2))
    print(f"dim_sp {dsp}  dim_mb {dmb}  N_SD {n_sd}", file=out)
    return dsp, dmb, n_sd


def cmd_verify(cfg: RunConfig, out=None) -> int:
    """Check the core invariants on the configured space and interaction."""
    from . import pauli

    out = out or sys.stdout
    cfg.resolve()
    space = make_space(cfg)
    _check_capacity(cfg, space)
    h = make_hamiltonian(cfg, space)
    n = space.n_qubits
    rng = np.random.default_rng(cfg.seed)
    basis = enumerate_m_basis(space, cfg.n_ci, cfg.z_ci, cfg.M2)
    h_op = fock.build_sparse_h(h, basis)
    pool = adapt.OperatorPool(adapt.build_pool(space), basis, n)
    results = []

    def check(name, ok, detail):
        results.append(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=out)

    # Fock vs JW Hamiltonian on the m-scheme sector
    if n <= 16:
        hq = pauli.jw_hamiltonian(h).to_sparse()
        idx = np.array([d.occupation for d in basis])
        dev = abs(hq[idx][:, idx] - h_op.matrix).max() if len(idx) else 0.0
        check("JW Hamiltonian vs Fock matrix", dev <= 1e-10, f"max deviation {dev:.2e}")
    # circuits vs matrix exponentials
    ops = [pool.ops[k] for k in rng.choice(len(pool), size=min(5, len(pool)), replace=False)] if len(pool) else []
    psi = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    psi /= np.linalg.norm(psi)
    if n <= qsim.MAX_QUBITS and ops:
        from .circuits import synthesize_exponential

        worst = 0.0
        for op in ops:
            th = rng.uniform(-np.pi, np.pi)
            a = fock.apply_exp_pool(pool.sparse(op), th, psi)
            b = qsim.apply(synthesize_exponential(op, th, n, cfg.connectivity).circuit, fock.embed(psi, basis, n))
            worst = max(worst, np.abs(fock.embed(a, basis, n) - b).max())
        check("circuit vs matrix exponential", worst <= 1e-10, f"max amplitude deviation {worst:.2e}")
    # gradient formula vs finite differences
    if ops:
        h_psi = h_op.matrix @ psi
        worst = 0.0
        for op in ops:
            g = adapt.commutator_gradient(h_psi, pool.sparse(op).matrix @ psi)

            def e(t):
                v = fock.apply_exp_pool(pool.sparse(op), t, psi)
                return np.vdot(v, h_op.matrix @ v).real

            worst = max(worst, abs((e(1e-5) - e(-1e-5)) / 2e-5 - g))
        check("gradient vs finite difference", worst <= 1e-6, f"max deviation {worst:.2e}")
    # measurement protocol
    if n <= 14:
        full = fock.embed(psi, basis, n)
        exact = np.vdot(psi, h_op.matrix @ psi).real
        for grouped in (False, True):
            est = measurement.estimate_from_state(measurement.measurement_plan(h, grouped), full)
            check(f"measurement plan ({'grouped' if grouped else 'ungrouped'})", abs(est - exact) <= 1e-10,
                  f"|estimate - <H>| = {abs(est - exact):.2e}")
    # short ADAPT run on both backends
    if n <= 14 and len(basis) > 1:
        kw = dict(max_layers=3, reference=_parse_reference(cfg.reference, space))
        r1 = adapt.run_adapt(adapt.AdaptConfig(space, cfg.n_ci, cfg.z_ci, cfg.M2, h, backend="matrix", **kw))
        r2 = adapt.run_adapt(adapt.AdaptConfig(space, cfg.n_ci, cfg.z_ci, cfg.M2, h, backend="circuit", **kw))
        dev = max(abs(a.energy - b.energy) for a, b in zip(r1.traces, r2.traces))
        check("backend agreement", dev <= 1e-8 and len(r1.traces) == len(r2.traces), f"max energy gap {dev:.2e}")
        energies = [t.energy for t in r1.traces]
        mono = all(b <= a + 1e-10 for a, b in zip(energies, energies[1:]))
        check("monotone energy, variational bound", mono and energies[-1] >= r1.exact_energy - 1e-9,
              f"E = {energies[-1]:.8f} vs exact {r1.exact_energy:.8f}")
    return EXIT_OK if all(results) else EXIT_VERIFY


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--nucleus", help="label such as 18O or Be6")
    p.add_argument("--shell", choices=sorted(SHELLS))
    p.add_argument("--orbitals", help="custom orbital file (n l 2j per line)")
    p.add_argument("--species", choices=("neutrons", "protons", "both"))
    p.add_argument("--n-ci", type=int, dest="n_ci", help="valence neutrons")
    p.add_argument("--z-ci", type=int, dest="z_ci", help="valence protons")
    p.add_argument("--J2", type=int, dest="J2", help="twice the ground-state J")
    p.add_argument("--M2", type=int, dest="M2", help="twice the total projection M")
    p.add_argument("--interaction", help="file, builtin:NAME, pairing[:G] or random[:SEED]")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shellvqe", description="ADAPT-VQE for nuclear shell-model valence spaces.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run ADAPT-VQE and write traces")
    _add_run_options(run)
    run.add_argument("--backend", choices=adapt.BACKENDS)
    run.add_argument("--connectivity", choices=("all", "linear"))
    run.add_argument("--max-layers", type=int, dest="max_layers")
    run.add_argument("--eps-target", type=float, dest="eps_target")
    run.add_argument("--reference", help="reference bitstring, qubit 0 first")
    run.add_argument("--shots", type=int, help="shots per measurement circuit for the final energy")
    run.add_argument("--mitigation", choices=sampling.MITIGATION_MODES)
    run.add_argument("--bitflip-rate", type=float, dest="bitflip_rate")
    run.add_argument("--output", "-o")
    run.add_argument("--resume", action="store_true", default=None, help="continue from OUTPUT/checkpoint.bin")
    run.add_argument("--dump-matrix", dest="dump_matrix", help="write the m-scheme Hamiltonian (coordinate text)")
    run.add_argument("--dump-statevector", dest="dump_statevector", help="write the final statevector (binary)")
    run.add_argument("--dump-circuit", dest="dump_circuit", help="write the final ansatz circuit (text)")
    run.add_argument("--tallies", help="write per-circuit shot tallies (CSV)")

    counts = sub.add_parser("counts", help="measurement-circuit counts")
    counts.add_argument("shell", choices=sorted(SHELLS))
    counts.add_argument("species", choices=("neutrons", "protons", "both"), nargs="?", default="both")

    dims = sub.add_parser("dims", help="basis dimensions")
    dims.add_argument("shell", choices=sorted(SHELLS))
    dims.add_argument("n_ci", type=int)
    dims.add_argument("z_ci", type=int)
    dims.add_argument("--M2", type=int, dest="M2")

    verify = sub.add_parser("verify", help="check invariants on a configuration")
    _add_run_options(verify)
    verify.add_argument("--reference")
    verify.add_argument("--connectivity", choices=("all", "linear"))
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in _FIELD_TYPES:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RunConfig(**values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "counts":
            cmd_counts(args.shell, args.species)
            return EXIT_OK
        if args.command == "dims":
            M2 = (args.n_ci + args.z_ci) % 2 if args.M2 is None else args.M2
            cmd_dims(args.shell, args.n_ci, args.z_ci, M2)
            return EXIT_OK
        cfg = config_from_args(args)
        return cmd_run(cfg) if args.command == "run" else cmd_verify(cfg)
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ShellVQEError, RuntimeError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
