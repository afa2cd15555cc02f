"""Measurement circuits for the Hamiltonian and for gradient products.

Terms of ``H`` fall in three families:

* local ``n_i`` and ``n_i n_j``: read in the computational basis;
* single hops ``n_x (a+_u a_w + h.c.)``: one ``M_uw`` circuit per hop pair;
* double hops on four distinct modes: ``M_ijkl`` circuits, optionally grouped.

A circuit's readout is derived by propagating its observable through the
(Clifford) basis change, giving ``sum_z c_z <Z^z>`` over bitstrings. That
covers Z-parity strings and grouped overlaps without case analysis.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .clifford import conjugate
from .hamiltonian import MSchemeHamiltonian, pair_channels
from .pauli import PauliSum, jw_double_hop, jw_number, jw_pool_op, string_length
from .qsim import Circuit
from .valence import ValenceSpace


@dataclass
class MeasurementCircuit:
    """One basis change plus the diagonal readout of what it measures.

    ``rules`` holds ``(coeff, zmask)`` pairs: the measured observable equals
    ``sum coeff * <Z^zmask>`` on the rotated state.
    """

    circuit_id: int
    kind: str
    terms: list
    basis_change: Circuit
    observable: PauliSum
    rules: list[tuple[float, int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.rules and len(self.observable):
            self.rules = readout_rules(self.basis_change, self.observable)

    @property
    def n_qubits(self) -> int:
        return self.basis_change.n_qubits

    def value_from_probs(self, probs: np.ndarray) -> float:
        """Observable from a full probability vector over basis indices."""
        idx = np.arange(len(probs), dtype=np.int64)
        total = 0.0
        for c, z in self.rules:
            signs = 1 - 2 * (np.bitwise_count(idx & z) & 1).astype(np.int8)
            total += c * float(signs @ probs)
        return total

    def value_from_counts(self, counts: dict[int, int]) -> tuple[float, float]:
        """Sample mean and its standard error from outcome counts."""
        outcomes = np.fromiter(counts.keys(), dtype=np.int64)
        weights = np.fromiter(counts.values(), dtype=float)
        shots = weights.sum()
        vals = np.zeros(len(outcomes))
        for c, z in self.rules:
            vals += c * (1 - 2 * (np.bitwise_count(outcomes & z) & 1).astype(np.int8))
        mean = float(weights @ vals / shots)
        var = float(weights @ (vals - mean) ** 2 / shots)
        return mean, float(np.sqrt(var / shots))


def readout_rules(basis_change: Circuit, observable: PauliSum) -> list[tuple[float, int]]:
    """Propagate ``observable`` through ``basis_change``; must end diagonal."""
    rotated = conjugate(basis_change, observable)
    rules = []
    for (x, z), c in rotated.items():
        if x:
            raise ValueError("basis change leaves a non-diagonal string")
        if abs(c.imag) > 1e-12:
            raise ValueError("non-Hermitian readout")
        rules.append((c.real, z))
    return rules


# ---------------------------------------------------------------------------
# elementary basis changes
# ---------------------------------------------------------------------------


def single_hop_circuit(j: int, k: int, n_qubits: int) -> Circuit:
    """M_jk = CX_kj H_k CX_kj (control first)."""
    if j == k:
        raise ValueError("hop needs two distinct modes")
    j, k = sorted((j, k))
    return Circuit(n_qubits).cnot(k, j).h(k).cnot(k, j)


def double_hop_network(i: int, j: int, k: int, l: int, n_qubits: int) -> Circuit:
    """CNOTs moving the X-part of a double hop onto pivot ``l``."""
    return Circuit(n_qubits).cnot(i, j).cnot(k, i).cnot(l, k)


def double_hop_circuit(i: int, j: int, k: int, l: int, n_qubits: int) -> Circuit:
    """M_ijkl = CX_ij CX_ki CX_lk H_l CX_lk CX_ki CX_ij."""
    if len({i, j, k, l}) != 4:
        raise ValueError("double hop needs four distinct modes")
    net = double_hop_network(i, j, k, l, n_qubits)
    return Circuit(n_qubits).extend(net).h(l).extend(net.inverse())


def measurement_basis_single_hop(i: int, j: int, k: int, n_qubits: int, coeff: float = 1.0) -> MeasurementCircuit:
    """Circuit for h_ijik = -n_i (a+_j a_k + h.c.)."""
    obs = coeff * jw_double_hop(i, j, i, k, n_qubits)
    return MeasurementCircuit(0, "single", [(i, j, i, k)], single_hop_circuit(j, k, n_qubits), obs)


def measurement_basis_double_hop(i: int, j: int, k: int, l: int, n_qubits: int, coeff: float = 1.0) -> MeasurementCircuit:
    """Circuit for a+_i a+_j a_l a_k + h.c. (the form entering H)."""
    obs = -coeff * jw_double_hop(i, j, k, l, n_qubits)
    return MeasurementCircuit(0, "double", [(i, j, k, l)], double_hop_circuit(i, j, k, l, n_qubits), obs)


# ---------------------------------------------------------------------------
# grouping of double hops
# ---------------------------------------------------------------------------


def _letter(x: int, z: int, q: int, n: int) -> str:
    bit = 1 << (n - 1 - q)
    return "IXZY"[bool(x & bit) | bool(z & bit) << 1]


def _cz(circ: Circuit, a: int, b: int):
    circ.h(b).cnot(a, b).h(b)


def simultaneous_circuit(observables, keys, n_qubits: int) -> Circuit:
    """Basis change diagonalizing several double hops at once.

    ``keys`` are ``(i, j, k, l)`` tuples, one per observable, whose index sets
    are pairwise disjoint or identical. Each support gets its CNOT network;
    afterwards every string reads ``(X|Y)_pivot * Z...``. Y pivots are turned
    into X by RZ(-pi/2), Z factors on other pivots are cleared with CZ, and a
    final H per pivot makes everything diagonal.
    """
    networks = Circuit(n_qubits)
    pivots = []
    seen = set()
    for key in keys:
        s = frozenset(key)
        if s in seen:
            continue
        seen.add(s)
        networks.extend(double_hop_network(*key, n_qubits))
        pivots.append(key[3])
    kind: dict[int, str] = {}
    edges = set()
    for obs in observables:
        rotated = conjugate(networks, obs)
        for (x, z), _ in rotated.items():
            xs = [q for q in pivots if _letter(x, z, q, n_qubits) in "XY"]
            if not xs:
                continue
            if len(xs) != 1 or x != 1 << (n_qubits - 1 - xs[0]):
                raise ValueError("strings are not pivot-local after the networks")
            v = xs[0]
            letter = _letter(x, z, v, n_qubits)
            if kind.setdefault(v, letter) != letter:
                raise ValueError(f"inconsistent pivot letter on qubit {v}")
            for u in pivots:
                if u != v and z >> (n_qubits - 1 - u) & 1:
                    edges.add((min(u, v), max(u, v)))
    circ = Circuit(n_qubits).extend(networks)
    for v in pivots:
        if kind.get(v) == "Y":
            circ.rz(v, -np.pi / 2)
    for a, b in sorted(edges):
        _cz(circ, a, b)
    for v in pivots:
        circ.h(v)
    return circ


def group_double_hops(keys) -> list[list[tuple[int, int, int, int]]]:
    """Greedy first-fit grouping of double-hop terms.

    Terms on the same four modes form one class; classes are sorted by
    decreasing Pauli-string length (then by modes) and each goes into the
    first group whose classes are all mode-disjoint from it.
    """
    classes = defaultdict(list)
    for key in keys:
        classes[tuple(sorted(key))].append(tuple(key))
    order = sorted(classes, key=lambda m: (-string_length(*m), m))
    groups: list[tuple[int, list]] = []
    for modes in order:
        mask = sum(1 << m for m in modes)
        for g, (gmask, members) in enumerate(groups):
            if not gmask & mask:
                members.extend(classes[modes])
                groups[g] = (gmask | mask, members)
                break
        else:
            groups.append((mask, list(classes[modes])))
    return [members for _, members in groups]


# ---------------------------------------------------------------------------
# Hamiltonian decomposition and the full plan
# ---------------------------------------------------------------------------


@dataclass
class HamiltonianTerms:
    n_qubits: int
    diagonal: PauliSum
    single: dict[tuple[int, int], PauliSum]
    single_keys: dict[tuple[int, int], list]
    double: dict[tuple[int, int, int, int], PauliSum]

    def total(self) -> PauliSum:
        out = self.diagonal
        for op in itertools.chain(self.single.values(), self.double.values()):
            out = out + op
        return out


def split_hamiltonian(h: MSchemeHamiltonian) -> HamiltonianTerms:
    """Group the qubit Hamiltonian by measurement family."""
    n = h.n_qubits
    diag = defaultdict(complex)
    single = defaultdict(lambda: defaultdict(complex))
    single_keys = defaultdict(list)
    double = {}

    def add(acc, ps: PauliSum, c):
        for key, v in ps.items():
            acc[key] += c * v

    for i, e in enumerate(h.spe):
        if e:
            add(diag, jw_number(i, n), e)
    for (i, j, k, l), v in sorted(h.tbme.items()):
        if (i, j) > (k, l):
            continue
        shared = {i, j} & {k, l}
        if len(shared) == 2:
            add(diag, jw_number(i, n) * jw_number(j, n), v)
        elif len(shared) == 1:
            hop = tuple(sorted({i, j, k, l} - shared))
            add(single[hop], jw_double_hop(i, j, k, l, n), -v)
            single_keys[hop].append((i, j, k, l))
        else:
            double[(i, j, k, l)] = -v * jw_double_hop(i, j, k, l, n)
    return HamiltonianTerms(
        n,
        PauliSum(n, dict(diag)),
        {hop: PauliSum(n, dict(acc)) for hop, acc in sorted(single.items())},
        dict(single_keys),
        dict(sorted(double.items())),
    )


def measurement_plan(h: MSchemeHamiltonian, grouped: bool = True) -> list[MeasurementCircuit]:
    """Circuits that together cover every Hamiltonian term exactly once."""
    terms = split_hamiltonian(h)
    n = terms.n_qubits
    plan = [MeasurementCircuit(0, "diagonal", ["local"], Circuit(n), terms.diagonal)]
    for (u, w), obs in terms.single.items():
        plan.append(MeasurementCircuit(len(plan), "single", terms.single_keys[(u, w)], single_hop_circuit(u, w, n), obs))
    keys = list(terms.double)
    groups = group_double_hops(keys) if grouped else [[k] for k in keys]
    for members in groups:
        obs = [terms.double[k] for k in members]
        circ = simultaneous_circuit(obs, members, n)
        total = PauliSum(n)
        for o in obs:
            total = total + o
        plan.append(MeasurementCircuit(len(plan), "double", members, circ, total))
    return plan


def estimate_from_state(plan, state: np.ndarray) -> float:
    """Exact <H> assembled from the circuits' analytic outcome probabilities."""
    from .qsim import apply

    total = 0.0
    for mc in plan:
        rotated = apply(mc.basis_change, state) if len(mc.basis_change) else state
        total += mc.value_from_probs(np.abs(rotated) ** 2)
    return total


# ---------------------------------------------------------------------------
# interaction-independent counting
# ---------------------------------------------------------------------------


def allowed_terms(space: ValenceSpace):
    """Symmetry-allowed single-hop pairs and double-hop keys of a space.

    A term is allowed when some coupled (J, T) channel connects both of its
    pairs, so a generic rotationally invariant interaction fills it.
    """
    chans = pair_channels(space)
    by_mt = defaultdict(list)
    st = space.states
    for (i, j), ch in chans.items():
        if ch:
            by_mt[(st[i].m2 + st[j].m2, st[i].tz2 + st[j].tz2)].append((i, j))

    def connected(p1, p2):
        c1, c2 = chans[p1], chans[p2]
        jt1 = {(J, T) for (_, _, J, T) in c1}
        return any((J, T) in jt1 for (_, _, J, T) in c2)

    hops = set()
    doubles = []
    for pairs in by_mt.values():
        for p1, p2 in itertools.combinations(pairs, 2):
            shared = set(p1) & set(p2)
            if not connected(p1, p2):
                continue
            if shared:
                hops.add(tuple(sorted(set(p1) ^ set(p2))))
            else:
                doubles.append((*p1, *p2))
    return sorted(hops), sorted(doubles)


@dataclass(frozen=True)
class CircuitCounts:
    n_qubits: int
    n_h: int
    n_hh: int
    n_hh_grouped: int

    @property
    def n_tot(self) -> int:
        return self.n_h + self.n_hh + 1

    @property
    def n_tot_grouped(self) -> int:
        return self.n_h + self.n_hh_grouped + 1


def count_measurement_circuits(space: ValenceSpace) -> CircuitCounts:
    hops, doubles = allowed_terms(space)
    return CircuitCounts(space.n_qubits, len(hops), len(doubles), len(group_double_hops(doubles)))


# ---------------------------------------------------------------------------
# gradient products
# ---------------------------------------------------------------------------


def pivot_first_network(i: int, j: int, k: int, l: int, n_qubits: int) -> Circuit:
    """CNOTs moving the X-part of a double hop onto its first mode ``i``."""
    return Circuit(n_qubits).cnot(k, l).cnot(i, j).cnot(i, k)


def gradient_measurement_circuit(h_indices, t_indices, n_qubits: int) -> MeasurementCircuit:
    """Basis change diagonalizing h_ijkl * T^{pq}_{rs}.

    With eight distinct modes both networks leave ``X_i Y_p`` type strings,
    which CX_ip RX_i(-pi/2) CX_ip makes diagonal. For contiguous modes the
    readout is -p00100010 + p00101010 - p10100010 + p10101010 over
    (i, j, k, l, p, q, r, s). When both operators act on the same modes the
    product is already diagonal and the basis change is empty.
    """
    i, j, k, l = h_indices
    p, q, r, s = t_indices
    obs = jw_double_hop(i, j, k, l, n_qubits) * jw_pool_op(p, q, r, s, n_qubits)
    if not obs.is_hermitian():
        raise ValueError("h and T do not commute on these modes; the product is not an observable")
    if obs.is_diagonal():
        return MeasurementCircuit(0, "gradient", [(h_indices, t_indices)], Circuit(n_qubits), obs)
    if len({i, j, k, l, p, q, r, s}) != 8:
        raise ValueError("gradient circuit needs eight distinct modes or fully shared ones")
    circ = Circuit(n_qubits)
    circ.extend(pivot_first_network(i, j, k, l, n_qubits))
    circ.extend(pivot_first_network(p, q, r, s, n_qubits))
    for attempt in _pair_diagonalizers(i, p, n_qubits):
        trial = Circuit(n_qubits).extend(circ).extend(attempt)
        try:
            rules = readout_rules(trial, obs)
        except ValueError:
            continue
        return MeasurementCircuit(0, "gradient", [(h_indices, t_indices)], trial, obs, rules)
    raise ValueError("no two-qubit diagonalizer found")


def _pair_diagonalizers(a: int, b: int, n: int):
    half = np.pi / 2
    for ang in (-half, half):
        for ctrl, tgt in ((a, b), (b, a)):
            yield Circuit(n).cnot(ctrl, tgt).rx(ctrl, ang).cnot(ctrl, tgt)
