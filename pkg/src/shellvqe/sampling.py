"""Finite-shot energy estimation with symmetry post-selection.

Each circuit draws its shots from its own Philox stream, keyed by the run
seed and the circuit id, so results do not depend on evaluation order.

Post-selection only uses checks that stay valid after the basis change: a
conserved quantity Q is tested literally when the circuit leaves Q
unchanged, otherwise the species parity is tested on its rotated support.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .clifford import conjugate
from .errors import EstimatorError
from .measurement import MeasurementCircuit, count_measurement_circuits
from .pauli import PauliSum, jw_number
from .qsim import apply
from .valence import NEUTRON, PROTON, ValenceSpace

MITIGATION_MODES = ("off", "number", "number+mtz")


@dataclass(frozen=True)
class MitigationPolicy:
    enforce_particle_number: bool = False
    enforce_M: bool = False
    enforce_Tz: bool = False

    @classmethod
    def from_mode(cls, mode: str) -> MitigationPolicy:
        if mode == "off":
            return cls()
        if mode == "number":
            return cls(True)
        if mode == "number+mtz":
            return cls(True, True, True)
        raise ValueError(f"mitigation must be one of {MITIGATION_MODES}")

    @property
    def active(self) -> bool:
        return self.enforce_particle_number or self.enforce_M or self.enforce_Tz


@dataclass(frozen=True)
class ShotPlan:
    n_shots_per_circuit: int | None
    circuits: list[MeasurementCircuit]
    seed: int = 0

    def __post_init__(self):
        if self.n_shots_per_circuit is not None and self.n_shots_per_circuit < 1:
            raise ValueError("need at least one shot per circuit")

    @property
    def total_executions(self) -> int:
        return (self.n_shots_per_circuit or 0) * len(self.circuits)


@dataclass
class SampleResult:
    energy: float
    std_error: float
    discard_fraction: float
    tallies: dict[int, dict[int, tuple[int, int]]] = field(default_factory=dict)

    def write_tallies(self, path, n_qubits: int) -> None:
        """CSV with columns circuit, bitstring, count, kept."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["circuit", "bitstring", "count", "kept"])
            for cid in sorted(self.tallies):
                for outcome in sorted(self.tallies[cid]):
                    count, kept = self.tallies[cid][outcome]
                    w.writerow([cid, format(outcome, f"0{n_qubits}b"), count, kept])


def circuit_rng(seed: int, circuit_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(circuit_id,))))


def inject_bitflips(samples: np.ndarray, n_qubits: int, rate: float, rng) -> np.ndarray:
    """Flip every bit of every sample independently with probability ``rate``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("flip rate must lie in [0, 1]")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.Generator(np.random.Philox(rng))
    samples = np.asarray(samples, dtype=np.int64)
    if rate == 0.0:
        return samples.copy()
    flips = rng.random((len(samples), n_qubits)) < rate
    weights = 1 << np.arange(n_qubits - 1, -1, -1, dtype=np.int64)
    return samples ^ (flips.astype(np.int64) @ weights)


def flip_one_bit(samples: np.ndarray, n_qubits: int, rng) -> np.ndarray:
    """Flip exactly one uniformly chosen bit in every sample."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.Generator(np.random.Philox(rng))
    samples = np.asarray(samples, dtype=np.int64)
    return samples ^ (np.int64(1) << rng.integers(0, n_qubits, len(samples)).astype(np.int64))


# ---------------------------------------------------------------------------
# symmetry checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetryTargets:
    """Expected eigenvalues of the conserved quantities."""

    space: ValenceSpace
    n_ci: int
    z_ci: int
    M2: int


def _species_number(space: ValenceSpace, tz2: int) -> PauliSum:
    n = space.n_qubits
    out = PauliSum(n)
    for q in space.qubits_of(tz2):
        out = out + jw_number(q, n)
    return out


def _weighted_number(space: ValenceSpace, weight) -> PauliSum:
    n = space.n_qubits
    out = PauliSum(n)
    for s in space.states:
        w = weight(s)
        if w:
            out = out + w * jw_number(s.qubit, n)
    return out


def _bit_values(outcomes: np.ndarray, space: ValenceSpace, weight) -> np.ndarray:
    n = space.n_qubits
    total = np.zeros(len(outcomes), dtype=np.int64)
    for s in space.states:
        w = weight(s)
        if w:
            total += w * ((outcomes >> (n - 1 - s.qubit)) & 1)
    return total


def symmetry_filter(mc: MeasurementCircuit, targets: SymmetryTargets, policy: MitigationPolicy):
    """Return a function outcomes -> keep-mask valid for this circuit's basis."""
    space = targets.space
    n = space.n_qubits
    checks = []
    circ = mc.basis_change

    def literal_or_parity(weight, expected, parity_qubits):
        q = _weighted_number(space, weight)
        if not len(circ) or conjugate(circ, q).allclose(q):
            checks.append(lambda out, w=weight, e=expected: _bit_values(out, space, w) == e)
            return
        if parity_qubits is None:
            return
        par = PauliSum.from_letters(n, {k: "Z" for k in parity_qubits})
        rot = conjugate(circ, par)
        if len(rot) == 1 and rot.is_diagonal():
            ((_, zmask), c), = rot.items()
            want = (-1) ** (expected % 2) * c.real
            checks.append(
                lambda out, z=zmask, want=want: (1 - 2 * (np.bitwise_count(out & z) & 1).astype(np.int8)) == np.sign(want)
            )

    counts = {NEUTRON: targets.n_ci, PROTON: targets.z_ci}
    if policy.enforce_particle_number:
        for tz2 in (NEUTRON, PROTON):
            qs = space.qubits_of(tz2)
            if qs:
                literal_or_parity(lambda s, t=tz2: int(s.tz2 == t), counts[tz2], qs)
    if policy.enforce_M:
        literal_or_parity(lambda s: s.m2, targets.M2, None)
    if policy.enforce_Tz:
        literal_or_parity(lambda s: s.tz2, targets.n_ci - targets.z_ci, None)

    def keep(outcomes):
        mask = np.ones(len(outcomes), dtype=bool)
        for chk in checks:
            mask &= chk(outcomes)
        return mask

    return keep


# ---------------------------------------------------------------------------
# estimator
# ---------------------------------------------------------------------------


def sample_energy(
    state: np.ndarray,
    plan: ShotPlan,
    policy: MitigationPolicy = MitigationPolicy(),
    targets: SymmetryTargets | None = None,
    bitflip_rate: float = 0.0,
    record_tallies: bool = False,
) -> SampleResult:
    """Estimate sum of circuit observables from sampled (or exact) outcomes.

    With ``plan.n_shots_per_circuit = None`` the outcome distribution is used
    exactly and the standard error is zero.
    """
    if policy.active and targets is None:
        raise ValueError("post-selection needs symmetry targets")
    energy = 0.0
    var = 0.0
    drawn = kept_total = 0
    tallies = {}
    for mc in plan.circuits:
        if not mc.rules:
            continue
        rotated = apply(mc.basis_change, state) if len(mc.basis_change) else np.asarray(state)
        probs = np.abs(rotated) ** 2
        probs /= probs.sum()
        keep = symmetry_filter(mc, targets, policy) if policy.active else None
        if plan.n_shots_per_circuit is None:
            if keep is not None:
                mask = keep(np.arange(len(probs), dtype=np.int64))
                probs = np.where(mask, probs, 0.0)
                if probs.sum() <= 0:
                    raise EstimatorError(f"circuit {mc.circuit_id}: no outcome survives post-selection", mc.circuit_id)
                probs /= probs.sum()
            energy += mc.value_from_probs(probs)
            continue
        rng = circuit_rng(plan.seed, mc.circuit_id)
        outcomes = rng.choice(len(probs), size=plan.n_shots_per_circuit, p=probs)
        if bitflip_rate:
            outcomes = inject_bitflips(outcomes, mc.n_qubits, bitflip_rate, rng)
        mask = keep(outcomes) if keep is not None else np.ones(len(outcomes), dtype=bool)
        drawn += len(outcomes)
        kept_total += int(mask.sum())
        if record_tallies:
            uniq, cnt = np.unique(outcomes, return_counts=True)
            kept_u = keep(uniq) if keep is not None else np.ones(len(uniq), dtype=bool)
            tallies[mc.circuit_id] = {int(u): (int(c), int(k)) for u, c, k in zip(uniq, cnt, kept_u)}
        if not mask.any():
            raise EstimatorError(f"circuit {mc.circuit_id}: every shot discarded", mc.circuit_id)
        uniq, cnt = np.unique(outcomes[mask], return_counts=True)
        mean, se = mc.value_from_counts(dict(zip(uniq.tolist(), cnt.tolist())))
        energy += mean
        var += se**2
    discard = 0.0 if drawn == 0 else 1.0 - kept_total / drawn
    return SampleResult(float(energy), float(np.sqrt(var)), discard, tallies)


def sample_outcomes(state: np.ndarray, mc: MeasurementCircuit, shots: int, seed: int) -> np.ndarray:
    """Raw outcome integers of one circuit (qubit 0 is the most significant bit)."""
    rotated = apply(mc.basis_change, state) if len(mc.basis_change) else np.asarray(state)
    probs = np.abs(rotated) ** 2
    return circuit_rng(seed, mc.circuit_id).choice(len(probs), size=shots, p=probs / probs.sum())


def required_circuit_budget(n_tot, n_fc_per_layer, n_s: int, grouped: bool = False) -> int:
    """Total circuit executions N_s * N_tot * sum(n_fc).

    ``n_tot`` is a circuit count or a ValenceSpace (then counted here).
    ``n_fc_per_layer`` is a sequence of optimizer function calls per layer;
    with no layers the reference energy is measured once.
    """
    if isinstance(n_tot, ValenceSpace):
        counts = count_measurement_circuits(n_tot)
        n_tot = counts.n_tot_grouped if grouped else counts.n_tot
    if n_tot < 1 or n_s < 1 or any(c < 0 for c in n_fc_per_layer):
        raise ValueError("counts must be positive")
    calls = sum(n_fc_per_layer)
    return n_s * n_tot * max(calls, 1)


def shots_for_precision(target: float, unit_sigma: float) -> int:
    """Shots per circuit for a standard error ``target``, from sigma ~ c / sqrt(N_s)."""
    if target <= 0:
        raise ValueError("target precision must be positive")
    return max(1, ceil((unit_sigma / target) ** 2))
