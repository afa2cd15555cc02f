"""Reference-state preparation and exact circuits for pool-operator exponentials.

Every Pauli string of one pool operator commutes with the others, so
``exp(i theta T)`` is the exact product of single-string exponentials, each
built as basis change + CNOT staircase + RZ + inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliSum, jw_pool_op, string_length
from .qsim import Circuit
from .valence import SlaterDet

CONNECTIVITY = ("all", "linear")


def prepare_reference(det: SlaterDet) -> Circuit:
    """One X gate per occupied mode."""
    circ = Circuit(det.n_qubits)
    for q in det.occupied:
        circ.x(q)
    return circ


def _support(mask: int, n: int) -> list[int]:
    return [q for q in range(n) if mask >> (n - 1 - q) & 1]


def pauli_exponential(n_qubits: int, x: int, z: int, phi: float) -> Circuit:
    """Circuit for exp(-i phi S) with S the letter string ``(x, z)``.

    X is rotated by H, Y by RX(pi/2); the CNOT staircase runs upward through
    the support and RZ(2 phi) acts on its highest qubit.
    """
    circ = Circuit(n_qubits)
    qubits = _support(x | z, n_qubits)
    if not qubits:
        return circ  # global phase only
    change = Circuit(n_qubits)
    for q in qubits:
        bit = 1 << (n_qubits - 1 - q)
        if x & bit and z & bit:
            change.rx(q, np.pi / 2)
        elif x & bit:
            change.h(q)
    ladder = Circuit(n_qubits)
    for a, b in zip(qubits, qubits[1:]):
        ladder.cnot(a, b)
    circ.extend(change).extend(ladder)
    circ.rz(qubits[-1], 2 * phi)
    circ.extend(ladder.inverse()).extend(change.inverse())
    return circ


def exponential_of_sum(op: PauliSum, theta: float) -> Circuit:
    """exp(i theta op) for a sum of mutually commuting real-coefficient strings."""
    circ = Circuit(op.n_qubits)
    for (x, z), c in op.items():
        if x == 0 and z == 0:
            continue
        circ.extend(pauli_exponential(op.n_qubits, x, z, -theta * c.real))
    return circ


@dataclass
class AnsatzLayer:
    op: tuple[int, int, int, int]
    theta: float
    circuit: Circuit
    routing: int = 0  # FSWAP gates added for linear connectivity

    @property
    def cnots(self) -> int:
        return self.circuit.cnot_count


def expected_cnots(op: tuple[int, int, int, int]) -> int:
    """16 (L - 1) for four distinct indices, generic weight count otherwise."""
    if len(set(op)) == 4:
        return 16 * (string_length(*op) - 1)
    n = max(op) + 1
    return sum(2 * (bin(x | z).count("1") - 1) for (x, z), _ in jw_pool_op(*op, n).items() if x | z)


def _inversions(target: list[int]) -> int:
    return sum(1 for i in range(len(target)) for j in range(i + 1, len(target)) if target[i] > target[j])


def _block_order(op) -> list[int]:
    """Modes of ``op`` in the order they should sit inside the routed block."""
    p, q, r, s = op
    modes = sorted(set(op))
    if len(modes) == 4:
        return modes
    # n_x T_uw: keep x at an end so every string stays contiguous
    x = ({p, q} & {r, s}).pop()
    u, w = sorted(set(modes) - {x})
    if x < u:
        return [x, u, w]
    if x > w:
        return [u, w, x]
    return [x, u, w] if (x - u) <= (w - x) else [u, w, x]


def routing_plan(op, n_qubits: int) -> tuple[list[tuple[int, int]], dict[int, int]]:
    """Adjacent FSWAPs gathering the modes of ``op`` into one block.

    Returns the swap list and the final position of each mode. The block
    position minimizes the number of swaps (ties: leftmost).
    """
    order = _block_order(op)
    k = len(order)
    members = set(order)
    best = None
    for start in range(n_qubits - k + 1):
        others = [m for m in range(n_qubits) if m not in members]
        layout = others[:start] + order + others[start:]
        # target[pos] = where the mode now at pos must go
        dest = {m: i for i, m in enumerate(layout)}
        target = [dest[m] for m in range(n_qubits)]
        cost = _inversions(target)
        if best is None or cost < best[0]:
            best = (cost, target, layout)
    _, target, layout = best
    swaps = []
    arr = list(target)
    changed = True
    while changed:
        changed = False
        for i in range(n_qubits - 1):
            if arr[i] > arr[i + 1]:
                arr[i], arr[i + 1] = arr[i + 1], arr[i]
                swaps.append((i, i + 1))
                changed = True
    position = {m: i for i, m in enumerate(layout)}
    return swaps, position


def synthesize_exponential(op, theta: float, n_qubits: int, connectivity: str = "all") -> AnsatzLayer:
    """Exact circuit for exp(i theta T^{pq}_{rs}).

    With ``connectivity="linear"`` the modes are first brought next to each
    other with FSWAPs, the operator is applied on the relabelled modes and
    the FSWAPs are undone.
    """
    if connectivity not in CONNECTIVITY:
        raise ValueError(f"connectivity must be one of {CONNECTIVITY}")
    op = tuple(int(i) for i in op)
    if connectivity == "all":
        return AnsatzLayer(op, theta, exponential_of_sum(jw_pool_op(*op, n_qubits), theta))
    swaps, pos = routing_plan(op, n_qubits)
    moved = tuple(pos[m] for m in op)
    circ = Circuit(n_qubits)
    for i, j in swaps:
        circ.fswap(i, j)
    circ.extend(exponential_of_sum(jw_pool_op(*moved, n_qubits), theta))
    for i, j in reversed(swaps):
        circ.fswap(i, j)
    for g in circ.gates:
        if g.kind == "CNOT" and abs(g.qubits[0] - g.qubits[1]) != 1:
            raise AssertionError(f"non-adjacent CNOT {g.qubits} after routing")
    return AnsatzLayer(op, theta, circ, routing=2 * len(swaps))


def ansatz_circuit(reference: SlaterDet, ops, thetas, connectivity: str = "all") -> Circuit:
    """Reference preparation followed by every layer in order."""
    circ = prepare_reference(reference)
    for op, th in zip(ops, thetas):
        circ.extend(synthesize_exponential(op, th, reference.n_qubits, connectivity).circuit)
    return circ
